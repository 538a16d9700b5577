//! Stream access unit: SLD/SST over `[rs1, rs2)` with stride `rs3`.
//!
//! One cacheline is generated per cycle. All iterations that fall in that line
//! are coalesced into a single Request Table entry. A line is only sent once
//! every iteration it covers has its condition (and, for SST, its source
//! word) available, so a line never needs two entries. Requests always go
//! through the LLC. SST lines fully covered by the store are written
//! directly; partial lines are read, merged and written back.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::dram::ReqKind;
use crate::engine::port::{Route, UnitId, Waiter};
use crate::engine::{Ctx, Issued, Retire, SimError};
use crate::isa::Opcode;
use crate::program::ArrayEntry;

#[derive(Clone, Debug)]
struct LineReq {
    line: u64,
    /// (iteration, element index)
    iters: Vec<(usize, u64)>,
}

#[derive(Clone, Debug)]
struct StreamOp {
    issued: Issued,
    store: bool,
    entry: ArrayEntry,
    start: u64,
    stride: u64,
    n: usize,
    next_i: usize,
    ready_at: u64,
    table: BTreeMap<u64, LineReq>,
    merge_writes: VecDeque<u64>,
}

#[derive(Clone, Debug)]
pub struct StreamUnit {
    op: Option<StreamOp>,
    next_token: u64,
    entries: usize,
    line_bytes: u64,
}

impl StreamUnit {
    pub fn new(request_table_entries: usize, line_bytes: u32) -> Self {
        Self {
            op: None,
            next_token: 0,
            entries: request_table_entries,
            line_bytes: line_bytes as u64,
        }
    }

    pub fn busy(&self) -> bool {
        self.op.is_some()
    }

    pub fn start(&mut self, issued: Issued, ctx: &mut Ctx) -> Result<(), SimError> {
        let i = issued.instr;
        let entry = ctx.arrays.get(i.base.unwrap()).clone();
        let [start, _, stride] = issued.regs;
        self.op = Some(StreamOp {
            store: i.opcode == Opcode::Sst,
            entry,
            start,
            stride,
            n: issued.n,
            next_i: 0,
            ready_at: ctx.cycle + ctx.cfg.maa.spd_unit_cycles,
            table: BTreeMap::new(),
            merge_writes: VecDeque::new(),
            issued,
        });
        Ok(())
    }

    /// Cycle at which the unit wants to run again without outside events.
    pub fn wake_cycle(&self) -> Option<u64> {
        self.op.as_ref().map(|o| o.ready_at)
    }

    fn token(&mut self, write: bool) -> u64 {
        self.next_token += 1;
        self.next_token << 1 | write as u64
    }

    pub fn step(&mut self, ctx: &mut Ctx) -> Result<bool, SimError> {
        let Some(op) = self.op.as_ref() else {
            return Ok(false);
        };
        if ctx.cycle < op.ready_at {
            return Ok(false);
        }
        // merged partial-line stores first
        if let Some(&tok) = op.merge_writes.front() {
            let line = op.table[&(tok & !1)].line;
            let t = self.token(true);
            let op = self.op.as_mut().unwrap();
            op.merge_writes.pop_front();
            let req = op.table.remove(&(tok & !1)).unwrap();
            op.table.insert(t, req);
            ctx.port.send(
                ctx.now,
                Waiter {
                    unit: UnitId::Stream,
                    token: t,
                },
                ReqKind::Write,
                line,
                Route::Llc,
            )?;
            return Ok(true);
        }
        self.generate(ctx)
    }

    fn generate(&mut self, ctx: &mut Ctx) -> Result<bool, SimError> {
        let line_bytes = self.line_bytes;
        let entries = self.entries;
        let op = self.op.as_mut().unwrap();
        let instr = op.issued.instr;
        let mut progressed = false;
        // leading iterations with a false condition need no memory access
        while op.next_i < op.n {
            let i = op.next_i;
            let cond = match instr.tc {
                None => true,
                Some(tc) => match ctx.spd.read_word(tc, i) {
                    None => return Ok(progressed),
                    Some(c) => c != 0,
                },
            };
            if cond {
                break;
            }
            if !op.store {
                ctx.spd.write_word(instr.td.unwrap(), i, 0);
            }
            op.next_i += 1;
            progressed = true;
        }
        if op.next_i == op.n {
            return Ok(progressed);
        }
        let elem = |op: &StreamOp, i: usize| -> Result<u64, SimError> {
            let k = (i as u64)
                .checked_mul(op.stride)
                .and_then(|d| d.checked_add(op.start));
            match k {
                Some(k) if k < op.entry.len => Ok(k),
                _ => Err(SimError::Bounds {
                    pc: op.issued.pc,
                    iteration: i,
                    index: k.unwrap_or(u64::MAX),
                    len: op.entry.len,
                }),
            }
        };
        let first = elem(op, op.next_i)?;
        let line = op.entry.addr(first) & !(line_bytes - 1);
        if op.table.len() >= entries || !ctx.port.can_send(Route::Llc, ReqKind::Read, line)? {
            ctx.stats.stream_stalls += 1;
            return Ok(progressed);
        }
        // scan the iterations in this line; all inputs must be present
        let mut iters = Vec::new();
        let mut skipped = Vec::new();
        let mut i = op.next_i;
        while i < op.n {
            let k = (i as u64)
                .checked_mul(op.stride)
                .and_then(|d| d.checked_add(op.start));
            let Some(k) = k else { break };
            if k >= op.entry.len || op.entry.addr(k) & !(line_bytes - 1) != line {
                break;
            }
            let cond = match instr.tc {
                None => true,
                Some(tc) => match ctx.spd.read_word(tc, i) {
                    None => return Ok(progressed),
                    Some(c) => c != 0,
                },
            };
            if cond {
                if op.store && ctx.spd.read_word(instr.ts1.unwrap(), i).is_none() {
                    return Ok(progressed);
                }
                iters.push((i, k));
            } else {
                skipped.push(i);
            }
            i += 1;
        }
        let words_per_line = (line_bytes / op.entry.dtype.width() as u64) as usize;
        let full = op.store && iters.len() == words_per_line;
        let a = instr.base.unwrap();
        if !op.store {
            for &s in &skipped {
                ctx.spd.write_word(instr.td.unwrap(), s, 0);
            }
        }
        if full {
            let mask = op.entry.dtype.mask();
            for &(it, k) in &iters {
                let v = ctx.spd.read_word(instr.ts1.unwrap(), it).unwrap();
                ctx.mem.array_mut(a).words[k as usize] = v & mask;
            }
        }
        op.next_i = i;
        let t = self.token(full);
        let op = self.op.as_mut().unwrap();
        op.table.insert(t, LineReq { line, iters });
        let kind = if full { ReqKind::Write } else { ReqKind::Read };
        ctx.port.send(
            ctx.now,
            Waiter {
                unit: UnitId::Stream,
                token: t,
            },
            kind,
            line,
            Route::Llc,
        )?;
        Ok(true)
    }

    pub fn respond(&mut self, token: u64, ctx: &mut Ctx) -> Result<(), SimError> {
        let op = self
            .op
            .as_mut()
            .ok_or(SimError::Internal("stream response while idle"))?;
        let instr = op.issued.instr;
        let a = instr.base.unwrap();
        if token & 1 == 1 {
            op.table
                .remove(&token)
                .ok_or(SimError::Internal("unknown stream write token"))?;
            return Ok(());
        }
        let req = op
            .table
            .get(&token)
            .ok_or(SimError::Internal("unknown stream read token"))?;
        if op.store {
            let mask = op.entry.dtype.mask();
            for &(it, k) in &req.iters {
                let v = ctx.spd.read_word(instr.ts1.unwrap(), it).unwrap();
                ctx.mem.array_mut(a).words[k as usize] = v & mask;
            }
            op.merge_writes.push_back(token);
        } else {
            let req = op.table.remove(&token).unwrap();
            for (it, k) in req.iters {
                let v = ctx.mem.array(a).words[k as usize];
                ctx.spd.write_word(instr.td.unwrap(), it, v);
            }
        }
        Ok(())
    }

    /// Hands back the finished instruction, if any.
    pub fn take_finished(&mut self) -> Option<Retire> {
        let op = self.op.as_ref()?;
        if op.next_i == op.n && op.table.is_empty() && op.merge_writes.is_empty() {
            let op = self.op.take().unwrap();
            return Some(Retire::plain(op.issued.slot));
        }
        None
    }
}
