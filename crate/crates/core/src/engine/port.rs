//! The accelerator's memory interface: routes unit requests to the LLC or
//! straight to DRAM, runs LLC lookups and miss fetches, and delivers
//! completions back to the units in time order.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::dram::{Completion, Dram, MemRequest, Origin, ReqKind};
use crate::llc::{Llc, Lookup};
use crate::Time;

use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum UnitId {
    Stream,
    Indirect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Llc,
    Dram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Waiter {
    pub unit: UnitId,
    pub token: u64,
}

impl Waiter {
    fn pack(self) -> u64 {
        self.token << 1 | (self.unit == UnitId::Indirect) as u64
    }

    fn unpack(v: u64) -> Self {
        let unit = if v & 1 == 1 {
            UnitId::Indirect
        } else {
            UnitId::Stream
        };
        Self {
            unit,
            token: v >> 1,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Owner {
    Unit(Waiter),
    LlcFill(u64),
    Writeback,
}

#[derive(Clone, Copy, Debug)]
enum Event {
    Respond(Waiter),
    Fetch { line: u64, origin: Origin },
    DramDone(u64),
}

#[derive(Clone, Copy, Debug)]
struct Outbound {
    kind: ReqKind,
    line: u64,
    origin: Origin,
    owner: Owner,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PortStats {
    pub requests: u64,
    pub llc_hits: u64,
    pub llc_misses: u64,
    pub direct_dram: u64,
}

pub struct Port {
    pub dram: Dram,
    pub llc: Llc,
    llc_latency: Time,
    events: BTreeMap<(Time, u64), Event>,
    seq: u64,
    owners: BTreeMap<u64, Owner>,
    next_id: u64,
    outbound: VecDeque<Outbound>,
    completions: Vec<Completion>,
    /// Completions delivered by the last [`Port::advance`].
    pub responses: Vec<Waiter>,
    pub stats: PortStats,
}

impl Port {
    pub fn new(dram: Dram, llc: Llc, llc_latency: Time) -> Self {
        Self {
            dram,
            llc,
            llc_latency,
            events: BTreeMap::new(),
            seq: 0,
            owners: BTreeMap::new(),
            next_id: 0,
            outbound: VecDeque::new(),
            completions: Vec::new(),
            responses: Vec::new(),
            stats: PortStats::default(),
        }
    }

    fn schedule(&mut self, t: Time, e: Event) {
        self.seq += 1;
        self.events.insert((t, self.seq), e);
    }

    pub fn can_send(&self, route: Route, kind: ReqKind, line: u64) -> Result<bool, SimError> {
        Ok(match (route, kind) {
            (Route::Llc, ReqKind::Read) => self.llc.can_read(line),
            (Route::Llc, ReqKind::Write) => true,
            (Route::Dram, _) => {
                let c = self.dram.map_address(line)?;
                self.dram.can_accept(c.channel)
            }
        })
    }

    /// Sends a cacheline request; the caller checked [`Port::can_send`].
    pub fn send(
        &mut self,
        now: Time,
        waiter: Waiter,
        kind: ReqKind,
        line: u64,
        route: Route,
    ) -> Result<(), SimError> {
        self.stats.requests += 1;
        let origin = match waiter.unit {
            UnitId::Stream => Origin::Stream,
            UnitId::Indirect => Origin::Indirect,
        };
        match route {
            Route::Llc => {
                let lookup = match kind {
                    ReqKind::Read => self.llc.read(line, waiter.pack()),
                    ReqKind::Write => self.llc.write(line),
                };
                let done = now + self.llc_latency;
                match lookup {
                    Lookup::Hit => {
                        self.stats.llc_hits += 1;
                        self.schedule(done, Event::Respond(waiter));
                    }
                    Lookup::WriteAllocate => {
                        self.stats.llc_misses += 1;
                        self.schedule(done, Event::Respond(waiter));
                    }
                    Lookup::MissNew => {
                        self.stats.llc_misses += 1;
                        self.schedule(done, Event::Fetch { line, origin });
                    }
                    Lookup::MissMerged => self.stats.llc_misses += 1,
                    Lookup::Reject => {
                        return Err(SimError::Internal("LLC request sent without a free MSHR"))
                    }
                }
                self.collect_writebacks();
            }
            Route::Dram => {
                self.stats.direct_dram += 1;
                self.enqueue_dram(now, kind, line, origin, Owner::Unit(waiter))?
                    .map_err(|_| SimError::Internal("DRAM request sent to a full buffer"))?;
            }
        }
        Ok(())
    }

    fn collect_writebacks(&mut self) {
        for line in self.llc.writebacks.drain(..) {
            self.outbound.push_back(Outbound {
                kind: ReqKind::Write,
                line,
                origin: Origin::LlcWriteback,
                owner: Owner::Writeback,
            });
        }
    }

    #[allow(clippy::type_complexity)]
    fn enqueue_dram(
        &mut self,
        now: Time,
        kind: ReqKind,
        line: u64,
        origin: Origin,
        owner: Owner,
    ) -> Result<Result<(), ()>, SimError> {
        let coord = self.dram.map_address(line)?;
        let id = self.next_id;
        let req = MemRequest {
            id,
            kind,
            addr: line,
            coord,
            arrival: now,
            origin,
        };
        match self.dram.enqueue(req, now) {
            Ok(()) => {
                self.next_id += 1;
                self.owners.insert(id, owner);
                Ok(Ok(()))
            }
            Err(_) => Ok(Err(())),
        }
    }

    fn flush_outbound(&mut self, now: Time) -> Result<(), SimError> {
        while let Some(o) = self.outbound.front().copied() {
            if self
                .enqueue_dram(now, o.kind, o.line, o.origin, o.owner)?
                .is_err()
            {
                // keep order: later entries wait behind the head
                break;
            }
            self.outbound.pop_front();
        }
        Ok(())
    }

    /// Processes every memory-side event up to and including `now`, in time
    /// order. Unit completions land in [`Port::responses`].
    pub fn advance(&mut self, now: Time) -> Result<bool, SimError> {
        self.responses.clear();
        let mut progressed = false;
        loop {
            let tw = self.dram.next_wake().filter(|&t| t <= now);
            let te = self
                .events
                .first_key_value()
                .map(|(k, _)| k.0)
                .filter(|&t| t <= now);
            match (tw, te) {
                (None, None) => break,
                (Some(w), e) if e.is_none_or(|e| w <= e) => {
                    self.dram.tick(w, &mut self.completions);
                    for c in core::mem::take(&mut self.completions) {
                        self.schedule(c.done, Event::DramDone(c.req.id));
                    }
                    self.flush_outbound(w)?;
                }
                (_, Some(e)) => {
                    let (_, ev) = self.events.pop_first().unwrap();
                    progressed = true;
                    self.handle(ev)?;
                    self.flush_outbound(e)?;
                }
                (Some(_), None) => unreachable!(),
            }
        }
        self.flush_outbound(now)?;
        Ok(progressed)
    }

    fn handle(&mut self, ev: Event) -> Result<(), SimError> {
        match ev {
            Event::Respond(w) => self.responses.push(w),
            Event::Fetch { line, origin } => self.outbound.push_back(Outbound {
                kind: ReqKind::Read,
                line,
                origin,
                owner: Owner::LlcFill(line),
            }),
            Event::DramDone(id) => match self.owners.remove(&id) {
                Some(Owner::Unit(w)) => self.responses.push(w),
                Some(Owner::LlcFill(line)) => {
                    for w in self.llc.fill(line) {
                        self.responses.push(Waiter::unpack(w));
                    }
                    self.collect_writebacks();
                }
                Some(Owner::Writeback) => {}
                None => return Err(SimError::Internal("DRAM completion without an owner")),
            },
        }
        Ok(())
    }

    /// Earliest pending memory-side event.
    pub fn next_event(&self) -> Option<Time> {
        let te = self.events.first_key_value().map(|(k, _)| k.0);
        match (self.dram.next_wake(), te) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn idle(&self) -> bool {
        self.events.is_empty() && self.outbound.is_empty() && self.dram.is_idle()
    }
}
