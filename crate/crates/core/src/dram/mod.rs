//! DDR4 memory model: per-bank row buffers, command timing, FR-FCFS
//! scheduling per channel, address mapping and statistics.
//!
//! Refresh, power-down and write-specific timing (tWR, tWTR, tFAW) are not
//! modeled; writes use the read column timing.

mod channel;
mod config;
mod mapping;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use channel::{BankState, Channel, ChannelCounters};
pub use config::DramConfig;
pub use mapping::{AddressMapping, DramCoord, MapField};

use crate::Time;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DramError {
    #[error("address {addr:#x} beyond capacity {capacity:#x}")]
    OutOfRange { addr: u64, capacity: u64 },
    #[error("illegal {cmd:?}: {reason}")]
    Protocol { cmd: Command, reason: &'static str },
    #[error("{cmd:?} at {at} ps violates timing (earliest {earliest} ps)")]
    Timing {
        cmd: Command,
        at: Time,
        earliest: Time,
    },
    #[error("invalid dram.{key}: {reason}")]
    Config {
        key: &'static str,
        reason: &'static str,
    },
    #[error("invalid address mapping: {0}")]
    BadMapping(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Command {
    Act,
    Pre,
    Rd,
    Wr,
}

impl Command {
    pub fn is_column(self) -> bool {
        matches!(self, Command::Rd | Command::Wr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReqKind {
    Read,
    Write,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Stream,
    Indirect,
    Baseline,
    LlcWriteback,
}

/// A cacheline-sized memory request.
#[derive(Clone, Debug, PartialEq)]
pub struct MemRequest {
    pub id: u64,
    pub kind: ReqKind,
    pub addr: u64,
    pub coord: DramCoord,
    pub arrival: Time,
    pub origin: Origin,
}

#[derive(Clone, Debug)]
pub struct Completion {
    pub req: MemRequest,
    /// End of the data burst.
    pub done: Time,
}

/// One issued DRAM command, as written to the event trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmdRecord {
    pub t: Time,
    pub channel: u32,
    pub rank: u32,
    pub bank_group: u32,
    pub bank: u32,
    pub row: u32,
    pub column: u32,
    pub cmd: Command,
    pub req: u64,
}

/// Aggregate statistics over all channels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DramStats {
    pub reads: u64,
    pub writes: u64,
    pub acts: u64,
    pub pres: u64,
    pub row_hits: u64,
    pub bytes: u64,
    pub accepted: u64,
    pub elapsed: Time,
    /// Data-bus utilization over `elapsed`, averaged over channels.
    pub bw_util: f64,
    /// Mean request-buffer fill as a fraction of its capacity.
    pub avg_occupancy: f64,
}

impl DramStats {
    /// Row-buffer hit rate; `None` when nothing was accessed.
    pub fn rbh(&self) -> Option<f64> {
        let n = self.reads + self.writes;
        (n > 0).then(|| self.row_hits as f64 / n as f64)
    }
}

/// All channels of the memory system.
#[derive(Clone, Debug)]
pub struct Dram {
    cfg: DramConfig,
    channels: Vec<Channel>,
    trace: Option<Vec<CmdRecord>>,
    scratch: Vec<Completion>,
    bursts: Vec<Time>,
}

impl Dram {
    pub fn new(cfg: DramConfig) -> Result<Self, DramError> {
        cfg.validate()?;
        let channels = (0..cfg.channels).map(|i| Channel::new(&cfg, i)).collect();
        Ok(Self {
            cfg,
            channels,
            trace: None,
            scratch: Vec::new(),
            bursts: Vec::new(),
        })
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn config(&self) -> &DramConfig {
        &self.cfg
    }

    pub fn channel(&self, ch: u32) -> &Channel {
        &self.channels[ch as usize]
    }

    pub fn map_address(&self, addr: u64) -> Result<DramCoord, DramError> {
        self.cfg.mapping.map(&self.cfg, addr)
    }

    pub fn can_accept(&self, ch: u32) -> bool {
        self.channels[ch as usize].queued() < self.cfg.request_buffer_size
    }

    pub fn enqueue(&mut self, req: MemRequest, now: Time) -> Result<(), MemRequest> {
        let ch = req.coord.channel as usize;
        self.channels[ch].enqueue(&self.cfg, req, now)
    }

    /// Earliest pending scheduler wake-up over all channels.
    pub fn next_wake(&self) -> Option<Time> {
        self.channels.iter().filter_map(|c| c.wake()).min()
    }

    /// Runs every channel whose wake-up is due at `now`; finished transfers are
    /// appended to `done`.
    pub fn tick(&mut self, now: Time, done: &mut Vec<Completion>) {
        let before = done.len();
        for ch in &mut self.channels {
            if ch.wake().is_some_and(|w| w <= now) {
                ch.frfcfs_step(&self.cfg, now, done, self.trace.as_mut());
            }
        }
        self.bursts.extend(done[before..].iter().map(|c| c.done));
    }

    /// End times of every data burst so far, in issue order per tick.
    pub fn bursts(&self) -> &[Time] {
        &self.bursts
    }

    /// Data-bus utilization over `[from, to)`, counting bursts that end inside
    /// the window.
    pub fn window_utilization(&self, from: Time, to: Time) -> f64 {
        if to <= from {
            return 0.0;
        }
        let n = self.bursts.iter().filter(|&&t| t > from && t <= to).count();
        let busy = n as f64 * self.cfg.burst_time() as f64;
        busy / ((to - from) as f64 * self.cfg.channels as f64)
    }

    /// Convenience driver: run until every buffer drains, returning completions.
    pub fn drain(&mut self) -> Vec<Completion> {
        let mut out = core::mem::take(&mut self.scratch);
        while let Some(t) = self.next_wake() {
            self.tick(t, &mut out);
        }
        out
    }

    pub fn is_idle(&self) -> bool {
        self.channels.iter().all(|c| c.queued() == 0)
    }

    pub fn take_trace(&mut self) -> Vec<CmdRecord> {
        self.trace.as_mut().map(core::mem::take).unwrap_or_default()
    }

    pub fn stats(&mut self, elapsed: Time) -> DramStats {
        let mut s = DramStats {
            elapsed,
            ..DramStats::default()
        };
        let mut occ = 0u128;
        let mut busy = 0u128;
        for ch in &mut self.channels {
            ch.finish(elapsed);
            let c = ch.counters();
            s.reads += c.reads;
            s.writes += c.writes;
            s.acts += c.acts;
            s.pres += c.pres;
            s.row_hits += c.row_hits;
            s.bytes += c.bytes;
            s.accepted += c.accepted;
            occ += c.occupancy_area;
            busy += c.busy_time as u128;
        }
        if elapsed > 0 {
            let denom = elapsed as f64 * self.channels.len() as f64;
            s.bw_util = busy as f64 / denom;
            s.avg_occupancy = occ as f64 / (denom * self.cfg.request_buffer_size as f64);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(dram: &Dram, id: u64, addr: u64, now: Time) -> MemRequest {
        MemRequest {
            id,
            kind: ReqKind::Read,
            addr,
            coord: dram.map_address(addr).unwrap(),
            arrival: now,
            origin: Origin::Baseline,
        }
    }

    #[test]
    fn ten_reads_one_row() {
        let mut dram = Dram::new(DramConfig::default()).unwrap();
        let stripe = 64 * 32; // next column, same bank
        for i in 0..10 {
            let r = read(&dram, i, i * stripe, 0);
            dram.enqueue(r, 0).unwrap();
        }
        let done = dram.drain();
        assert_eq!(done.len(), 10);
        let end = done.iter().map(|c| c.done).max().unwrap();
        let s = dram.stats(end);
        assert_eq!(s.acts, 1);
        assert_eq!(s.rbh(), Some(0.9));
    }

    #[test]
    fn first_access_misses() {
        let mut dram = Dram::new(DramConfig::default()).unwrap();
        let r = read(&dram, 0, 0, 0);
        dram.enqueue(r, 0).unwrap();
        let done = dram.drain();
        // visible at the next edge, ACT, tRCD, one burst
        assert_eq!(done[0].done, 625 + 12_500 + 2_500);
        assert_eq!(dram.stats(done[0].done).rbh(), Some(0.0));
    }

    #[test]
    fn no_accesses_means_no_rbh() {
        let mut dram = Dram::new(DramConfig::default()).unwrap();
        assert_eq!(dram.stats(0).rbh(), None);
    }

    #[test]
    fn saturated_alternating_groups_fill_the_bus() {
        let cfg = DramConfig::default();
        let mut dram = Dram::new(cfg.clone()).unwrap();
        // one channel, alternate bank groups, stay in one row per bank
        let mut addrs = Vec::new();
        for col in 0..64u32 {
            for bg in 0..4u32 {
                let c = DramCoord {
                    bank_group: bg,
                    column: col,
                    ..DramCoord::default()
                };
                addrs.push(cfg.mapping.unmap(&cfg, &c));
            }
        }
        let reqs: Vec<_> = addrs
            .iter()
            .enumerate()
            .map(|(i, &a)| read(&dram, i as u64, a, 0))
            .collect();
        let mut pending = reqs.into_iter();
        let mut next = pending.next();
        let mut done = Vec::new();
        let mut now = 0;
        let mut first_data = None;
        loop {
            while let Some(r) = next.take() {
                match dram.enqueue(r, now) {
                    Ok(()) => next = pending.next(),
                    Err(r) => {
                        next = Some(r);
                        break;
                    }
                }
            }
            let Some(t) = dram.next_wake() else { break };
            now = t;
            let before = done.len();
            dram.tick(now, &mut done);
            if first_data.is_none() && done.len() > before {
                first_data = Some(done[before].done - cfg.burst_time());
            }
        }
        assert_eq!(done.len(), 256);
        let start = first_data.unwrap();
        let end = done.iter().map(|c| c.done).max().unwrap();
        let util = 256.0 * cfg.burst_time() as f64 / (end - start) as f64;
        assert!(util > 0.99, "util {util}");
    }
}
