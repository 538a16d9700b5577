//! Timing models of the vector ALU and the range fuser. Both consume source
//! elements in order as their finish bits appear, so they overlap with the
//! producing memory instruction.

use super::{alu, range_step, RangeCursor, RangeStep};
use crate::engine::{Ctx, Issued, Retire, SimError};
use crate::isa::Opcode;

#[derive(Clone, Debug)]
struct AluOpState {
    issued: Issued,
    next: usize,
    ready_at: u64,
}

/// ALUV/ALUS: up to `lanes` elements per cycle.
#[derive(Clone, Debug)]
pub struct AluUnit {
    op: Option<AluOpState>,
    lanes: usize,
}

impl AluUnit {
    pub fn new(lanes: usize) -> Self {
        Self { op: None, lanes }
    }

    pub fn busy(&self) -> bool {
        self.op.is_some()
    }

    pub fn wake_cycle(&self) -> Option<u64> {
        self.op.as_ref().map(|o| o.ready_at)
    }

    pub fn start(&mut self, issued: Issued, ctx: &mut Ctx) {
        self.op = Some(AluOpState {
            issued,
            next: 0,
            ready_at: ctx.cycle + ctx.cfg.maa.spd_unit_cycles,
        });
    }

    pub fn step(&mut self, ctx: &mut Ctx) -> Result<bool, SimError> {
        let Some(op) = self.op.as_mut() else {
            return Ok(false);
        };
        if ctx.cycle < op.ready_at {
            return Ok(false);
        }
        let i = op.issued.instr;
        let (aop, dtype) = (i.op.unwrap(), i.dtype.unwrap());
        let start = op.next;
        while op.next < op.issued.n && op.next - start < self.lanes {
            let k = op.next;
            let cond = match i.tc {
                None => true,
                Some(tc) => match ctx.spd.read_word(tc, k) {
                    None => break,
                    Some(c) => c != 0,
                },
            };
            let Some(a) = ctx.spd.read_word(i.ts1.unwrap(), k) else {
                break;
            };
            let b = match i.opcode {
                Opcode::Aluv => match ctx.spd.read_word(i.ts2.unwrap(), k) {
                    None => break,
                    Some(b) => b,
                },
                _ => op.issued.regs[0],
            };
            let r = if cond {
                alu(aop, dtype, a, b).map_err(|_| SimError::Operand {
                    pc: op.issued.pc,
                    reason: "invalid ALU operation",
                })?
            } else {
                0
            };
            ctx.spd.write_word(i.td.unwrap(), k, r);
            op.next += 1;
        }
        Ok(op.next > start)
    }

    pub fn take_finished(&mut self) -> Option<Retire> {
        let op = self.op.as_ref()?;
        (op.next == op.issued.n).then(|| Retire::plain(self.op.take().unwrap().issued.slot))
    }
}

#[derive(Clone, Debug)]
struct FuseState {
    issued: Issued,
    cur: RangeCursor,
    emitted: usize,
    cap: usize,
    resume: Option<RangeCursor>,
    ready_at: u64,
}

/// RNG: examines up to `lanes` outer or inner steps per cycle and writes the
/// produced pairs into the two destination tiles.
#[derive(Clone, Debug)]
pub struct RangeFuser {
    op: Option<FuseState>,
    lanes: usize,
}

impl RangeFuser {
    pub fn new(lanes: usize) -> Self {
        Self { op: None, lanes }
    }

    pub fn busy(&self) -> bool {
        self.op.is_some()
    }

    pub fn wake_cycle(&self) -> Option<u64> {
        self.op.as_ref().map(|o| o.ready_at)
    }

    pub fn start(&mut self, issued: Issued, ctx: &mut Ctx) {
        self.op = Some(FuseState {
            cur: issued.cursor,
            emitted: 0,
            cap: ctx.spd.tile_size(),
            resume: None,
            ready_at: ctx.cycle + ctx.cfg.maa.spd_unit_cycles,
            issued,
        });
    }

    fn done(op: &FuseState) -> bool {
        op.resume.is_some() || op.cur.i >= op.issued.n as u64
    }

    pub fn step(&mut self, ctx: &mut Ctx) -> Result<bool, SimError> {
        let Some(op) = self.op.as_mut() else {
            return Ok(false);
        };
        if ctx.cycle < op.ready_at {
            return Ok(false);
        }
        let i = op.issued.instr;
        let stride = op.issued.regs[0];
        let mut progressed = false;
        for _ in 0..self.lanes {
            if Self::done(op) {
                break;
            }
            let k = op.cur.i as usize;
            let cond = match i.tc {
                None => true,
                Some(tc) => match ctx.spd.read_word(tc, k) {
                    None => break,
                    Some(c) => c != 0,
                },
            };
            let (Some(lo), Some(hi)) = (
                ctx.spd.read_word(i.ts1.unwrap(), k),
                ctx.spd.read_word(i.ts2.unwrap(), k),
            ) else {
                break;
            };
            progressed = true;
            if let RangeStep::Pair(a, b) = range_step(&mut op.cur, lo, hi, cond, stride) {
                if op.emitted == op.cap {
                    op.resume = Some(RangeCursor { i: a, j: b });
                    break;
                }
                ctx.spd.write_word(i.td.unwrap(), op.emitted, a);
                ctx.spd.write_word(i.td2.unwrap(), op.emitted, b);
                op.emitted += 1;
            }
        }
        Ok(progressed)
    }

    pub fn take_finished(&mut self) -> Option<Retire> {
        let op = self.op.as_ref()?;
        if !Self::done(op) {
            return None;
        }
        let op = self.op.take().unwrap();
        Some(Retire {
            slot: op.issued.slot,
            sizes: Some(op.emitted),
            cursor: Some(op.resume.unwrap_or_default()),
        })
    }
}
