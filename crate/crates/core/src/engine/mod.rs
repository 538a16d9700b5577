//! Controller: scoreboard, modeled host core, unit dispatch and the run loop.
//!
//! Time advances in accelerator cycles. Each cycle the memory side is brought
//! up to date, responses are delivered, every unit takes one step, finished
//! instructions retire, waiting ones issue and the core executes its next
//! statement. When a cycle changes nothing the loop jumps straight to the next
//! pending event.

pub mod baseline;
pub mod config;
pub mod port;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BaselineConfig, DrainPolicy, MaaConfig, SimConfig};

use crate::compute::{alu_result_type, AluUnit, RangeCursor, RangeFuser};
use crate::dram::{Dram, DramError, DramStats};
use crate::indirect::IndirectUnit;
use crate::isa::{DType, Instruction, Opcode};
use crate::llc::Llc;
use crate::program::{ArrayTable, LayoutError, MemoryImage, Program, Stmt};
use crate::scratchpad::{Scratchpad, TileData};
use crate::stream::StreamUnit;
use crate::trace::TraceEvent;
use crate::Time;
use port::{Port, UnitId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("deadlock at cycle {cycle}: {snapshot}")]
    Deadlock { cycle: u64, snapshot: String },
    #[error(
        "statement {pc}: iteration {iteration} reads index {index} of an array of {len} elements"
    )]
    Bounds {
        pc: usize,
        iteration: usize,
        index: u64,
        len: u64,
    },
    #[error("statement {pc}: {reason}")]
    Operand { pc: usize, reason: &'static str },
    #[error(transparent)]
    Dram(#[from] DramError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("invalid program: {0}")]
    Validation(String),
    #[error("internal error: {0}")]
    Internal(&'static str),
}

/// An instruction leaving the scoreboard for a unit.
#[derive(Clone, Debug)]
pub struct Issued {
    pub slot: usize,
    /// Index of the statement in the program body.
    pub pc: usize,
    pub instr: Instruction,
    /// Register operands captured at dispatch, in `rs1, rs2, rs3` order.
    pub regs: [u64; 3],
    /// Range fusion start point (RNG only).
    pub cursor: RangeCursor,
    /// Iteration count.
    pub n: usize,
}

/// A unit reporting a finished instruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Retire {
    pub slot: usize,
    /// Destination size decided at completion (RNG).
    pub sizes: Option<usize>,
    /// Cursor left for the next range fusion (RNG).
    pub cursor: Option<RangeCursor>,
}

impl Retire {
    pub fn plain(slot: usize) -> Self {
        Self {
            slot,
            sizes: None,
            cursor: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnitStats {
    pub stream_stalls: u64,
    pub indirect_requests: u64,
    pub capacity_drains: u64,
}

/// What a unit sees during one step.
pub struct Ctx<'a> {
    pub now: Time,
    pub cycle: u64,
    pub cfg: &'a SimConfig,
    pub spd: &'a mut Scratchpad,
    pub mem: &'a mut MemoryImage,
    pub arrays: &'a ArrayTable,
    pub port: &'a mut Port,
    pub stats: &'a mut UnitStats,
    pub trace: Option<&'a mut Vec<TraceEvent>>,
}

/// Summary of one run; also one row of the CSV output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub label: String,
    pub mode: String,
    pub cycles: u64,
    pub elapsed_ps: Time,
    pub dram_reads: u64,
    pub dram_writes: u64,
    pub dram_acts: u64,
    pub dram_pres: u64,
    pub row_hits: u64,
    pub rbh: Option<f64>,
    pub bytes: u64,
    pub bw_util: f64,
    pub avg_occupancy: f64,
    /// Utilization between the 10% and 90% marks of the data transfers.
    pub steady_bw_util: f64,
    pub llc_hits: u64,
    pub llc_misses: u64,
    pub direct_dram: u64,
    pub indirect_requests: u64,
    pub capacity_drains: u64,
    pub stream_stalls: u64,
}

impl StatReport {
    pub(crate) fn from_dram(
        label: &str,
        mode: &str,
        cycles: u64,
        s: &DramStats,
        dram: &Dram,
    ) -> Self {
        let b = dram.bursts();
        let steady = if b.len() >= 10 {
            let mut sorted = b.to_vec();
            sorted.sort_unstable();
            let from = sorted[sorted.len() / 10];
            let to = sorted[sorted.len() * 9 / 10];
            dram.window_utilization(from, to)
        } else {
            s.bw_util
        };
        Self {
            label: String::from(label),
            mode: String::from(mode),
            cycles,
            elapsed_ps: s.elapsed,
            dram_reads: s.reads,
            dram_writes: s.writes,
            dram_acts: s.acts,
            dram_pres: s.pres,
            row_hits: s.row_hits,
            rbh: s.rbh(),
            bytes: s.bytes,
            bw_util: s.bw_util,
            avg_occupancy: s.avg_occupancy,
            steady_bw_util: steady,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub trace: bool,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub image: MemoryImage,
    pub tiles: Vec<TileData>,
    pub registers: Vec<u64>,
    pub stats: StatReport,
    pub trace: Vec<TraceEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SlotState {
    Waiting,
    Running,
}

#[derive(Clone, Debug)]
struct Slot {
    seq: u64,
    pc: usize,
    instr: Instruction,
    regs: [u64; 3],
    cursor: RangeCursor,
    state: SlotState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Stream,
    Indirect,
    Alu,
    Fuser,
}

fn unit_kind(op: Opcode) -> Kind {
    match op {
        Opcode::Sld | Opcode::Sst => Kind::Stream,
        Opcode::Ild | Opcode::Ist | Opcode::Irmw => Kind::Indirect,
        Opcode::Aluv | Opcode::Alus => Kind::Alu,
        Opcode::Rng => Kind::Fuser,
    }
}

/// Array touched by a memory instruction and whether it writes it.
fn array_access(i: &Instruction) -> Option<(u16, bool)> {
    i.base.map(|b| (b, i.opcode.writes_memory()))
}

/// Element count of a strided access over `[start, end)`.
pub fn stream_count(start: u64, end: u64, stride: u64) -> u64 {
    if end <= start {
        0
    } else {
        (end - start).div_ceil(stride)
    }
}

/// Destination type tags an instruction gives its destination tiles.
pub(crate) fn dest_types(i: &Instruction, ts1_type: Option<DType>) -> [Option<DType>; 2] {
    match i.opcode {
        Opcode::Ild | Opcode::Sld => [i.dtype, None],
        Opcode::Aluv | Opcode::Alus => {
            [Some(alu_result_type(i.op.unwrap(), i.dtype.unwrap())), None]
        }
        Opcode::Rng => [Some(DType::U32), ts1_type.or(Some(DType::U32))],
        _ => [None, None],
    }
}

enum Dispatch {
    Done,
    Blocked,
}

struct Machine<'a> {
    cfg: &'a SimConfig,
    program: &'a Program,
    arrays: ArrayTable,
    spd: Scratchpad,
    mem: MemoryImage,
    port: Port,
    slots: Vec<Option<Slot>>,
    seq: u64,
    stream: StreamUnit,
    indirect: IndirectUnit,
    alu: AluUnit,
    fuser: RangeFuser,
    stats: UnitStats,
    trace: Option<Vec<TraceEvent>>,
    pc: usize,
    core_ready: u64,
    cycle: u64,
}

impl<'a> Machine<'a> {
    fn now(&self) -> Time {
        self.cfg.maa.cycle_time(self.cycle)
    }

    fn rng_in_flight(&self) -> bool {
        self.slots
            .iter()
            .flatten()
            .any(|s| s.instr.opcode == Opcode::Rng)
    }

    fn is_cursor_reg(&self, r: u8) -> bool {
        r == self.cfg.maa.cursor_i_reg() || r == self.cfg.maa.cursor_j_reg()
    }

    fn record(&mut self, e: TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(e);
        }
    }

    fn try_dispatch(&mut self, pc: usize, i: &Instruction) -> Result<Dispatch, SimError> {
        let Some(slot) = self.slots.iter().position(Option::is_none) else {
            return Ok(Dispatch::Blocked);
        };
        if i.dest_tiles().any(|t| self.spd.tile(t).in_use()) {
            return Ok(Dispatch::Blocked);
        }
        if self.rng_in_flight()
            && (i.opcode == Opcode::Rng || i.registers().any(|r| self.is_cursor_reg(r)))
        {
            return Ok(Dispatch::Blocked);
        }
        let mut regs = [0u64; 3];
        for (k, r) in i.registers().enumerate() {
            regs[k] = self.spd.reg(r);
        }
        let cursor = RangeCursor {
            i: self.spd.reg(self.cfg.maa.cursor_i_reg()),
            j: self.spd.reg(self.cfg.maa.cursor_j_reg()),
        };
        let mut sld_size = None;
        if i.opcode.is_stream() {
            let [start, end, stride] = regs;
            if stride == 0 {
                return Err(SimError::Operand {
                    pc,
                    reason: "stream stride is zero",
                });
            }
            let n = stream_count(start, end, stride);
            if n > self.spd.tile_size() as u64 {
                return Err(SimError::Operand {
                    pc,
                    reason: "stream length exceeds the tile size",
                });
            }
            sld_size = Some(n as usize);
        }
        if i.opcode == Opcode::Rng && regs[0] == 0 {
            return Err(SimError::Operand {
                pc,
                reason: "range stride is zero",
            });
        }
        let ts1_type = i.ts1.and_then(|t| self.spd.tile(t).dtype());
        self.spd.dispatch_mark(i, dest_types(i, ts1_type));
        if let (Opcode::Sld, Some(n)) = (i.opcode, sld_size) {
            self.spd.set_size(i.td.unwrap(), n);
        }
        self.seq += 1;
        self.slots[slot] = Some(Slot {
            seq: self.seq,
            pc,
            instr: *i,
            regs,
            cursor,
            state: SlotState::Waiting,
        });
        let t = self.now();
        self.record(TraceEvent::Dispatch { t, pc, slot });
        Ok(Dispatch::Done)
    }

    fn unit_busy(&self, k: Kind) -> bool {
        match k {
            Kind::Stream => self.stream.busy(),
            Kind::Indirect => self.indirect.busy(),
            Kind::Alu => self.alu.busy(),
            Kind::Fuser => self.fuser.busy(),
        }
    }

    /// Iteration count, or `None` while a source size is still unknown.
    fn issue_count(&self, s: &Slot) -> Result<Option<usize>, SimError> {
        let i = &s.instr;
        let size = |t: Option<u8>| t.map(|t| self.spd.tile(t).size());
        if i.source_tiles().any(|t| self.spd.tile(t).size().is_none()) {
            return Ok(None);
        }
        let bad = |reason| Err(SimError::Operand { pc: s.pc, reason });
        let n = if i.opcode.is_stream() {
            stream_count(s.regs[0], s.regs[1], s.regs[2]) as usize
        } else {
            size(i.ts1).flatten().unwrap()
        };
        if i.opcode == Opcode::Aluv || i.opcode == Opcode::Rng {
            if size(i.ts2).flatten() != Some(n) {
                return bad("source tiles differ in size");
            }
        } else if let Some(Some(m)) = size(i.ts2) {
            if m < n {
                return bad("value tile shorter than the index tile");
            }
        }
        if i.opcode == Opcode::Sst && size(i.ts1).flatten().unwrap() < n {
            return bad("source tile shorter than the stream");
        }
        if let Some(Some(m)) = size(i.tc) {
            if m < n {
                return bad("condition tile shorter than the operation");
            }
        }
        if i.opcode == Opcode::Rng
            && i.ts1
                .and_then(|t| self.spd.tile(t).dtype())
                .is_some_and(DType::is_float)
        {
            return bad("range bounds must be integers");
        }
        Ok(Some(n))
    }

    fn array_hazard(&self, s: &Slot) -> bool {
        let Some((a, w)) = array_access(&s.instr) else {
            return false;
        };
        self.slots.iter().flatten().any(|o| {
            o.seq < s.seq && array_access(&o.instr).is_some_and(|(b, v)| a == b && (w || v))
        })
    }

    fn issue(&mut self) -> Result<bool, SimError> {
        let mut progressed = false;
        for kind in [Kind::Stream, Kind::Indirect, Kind::Alu, Kind::Fuser] {
            if self.unit_busy(kind) {
                continue;
            }
            // in order per unit: only the oldest waiting instruction may go
            let Some(k) = self
                .slots
                .iter()
                .enumerate()
                .filter_map(|(k, s)| s.as_ref().map(|s| (k, s)))
                .filter(|(_, s)| s.state == SlotState::Waiting && unit_kind(s.instr.opcode) == kind)
                .min_by_key(|(_, s)| s.seq)
                .map(|(k, _)| k)
            else {
                continue;
            };
            let s = self.slots[k].clone().unwrap();
            if self.array_hazard(&s) {
                continue;
            }
            let Some(n) = self.issue_count(&s)? else {
                continue;
            };
            let i = s.instr;
            if matches!(i.opcode, Opcode::Ild | Opcode::Aluv | Opcode::Alus) {
                self.spd.set_size(i.td.unwrap(), n);
            }
            self.slots[k].as_mut().unwrap().state = SlotState::Running;
            let issued = Issued {
                slot: k,
                pc: s.pc,
                instr: i,
                regs: s.regs,
                cursor: s.cursor,
                n,
            };
            let (now, cycle) = (self.now(), self.cycle);
            self.record(TraceEvent::Issue {
                t: now,
                pc: s.pc,
                slot: k,
                n,
            });
            let mut ctx = Ctx {
                now,
                cycle,
                cfg: self.cfg,
                spd: &mut self.spd,
                mem: &mut self.mem,
                arrays: &self.arrays,
                port: &mut self.port,
                stats: &mut self.stats,
                trace: self.trace.as_mut(),
            };
            match kind {
                Kind::Stream => self.stream.start(issued, &mut ctx)?,
                Kind::Indirect => self.indirect.start(issued, &mut ctx)?,
                Kind::Alu => self.alu.start(issued, &mut ctx),
                Kind::Fuser => self.fuser.start(issued, &mut ctx),
            }
            progressed = true;
        }
        Ok(progressed)
    }

    fn retire(&mut self) -> bool {
        let done: Vec<Retire> = [
            self.stream.take_finished(),
            self.indirect.take_finished(),
            self.alu.take_finished(),
            self.fuser.take_finished(),
        ]
        .into_iter()
        .flatten()
        .collect();
        let progressed = !done.is_empty();
        for r in done {
            let s = self.slots[r.slot].take().unwrap();
            if let Some(n) = r.sizes {
                for t in s.instr.dest_tiles() {
                    self.spd.set_size(t, n);
                }
            }
            if let Some(c) = r.cursor {
                self.spd.set_reg(self.cfg.maa.cursor_i_reg(), c.i);
                self.spd.set_reg(self.cfg.maa.cursor_j_reg(), c.j);
            }
            self.spd.retire_mark(&s.instr);
            let t = self.now();
            self.record(TraceEvent::Retire {
                t,
                pc: s.pc,
                slot: r.slot,
            });
        }
        progressed
    }

    fn step_units(&mut self) -> Result<bool, SimError> {
        let (now, cycle) = (self.now(), self.cycle);
        let mut ctx = Ctx {
            now,
            cycle,
            cfg: self.cfg,
            spd: &mut self.spd,
            mem: &mut self.mem,
            arrays: &self.arrays,
            port: &mut self.port,
            stats: &mut self.stats,
            trace: self.trace.as_mut(),
        };
        let mut progressed = false;
        for w in core::mem::take(&mut ctx.port.responses) {
            match w.unit {
                UnitId::Stream => self.stream.respond(w.token, &mut ctx)?,
                UnitId::Indirect => self.indirect.respond(w.token, &mut ctx)?,
            }
            progressed = true;
        }
        progressed |= self.stream.step(&mut ctx)?;
        progressed |= self.indirect.step(&mut ctx)?;
        progressed |= self.alu.step(&mut ctx)?;
        progressed |= self.fuser.step(&mut ctx)?;
        Ok(progressed)
    }

    fn core_step(&mut self) -> Result<bool, SimError> {
        if self.cycle < self.core_ready {
            return Ok(false);
        }
        let Some(stmt) = self.program.body.get(self.pc) else {
            return Ok(false);
        };
        let maa = &self.cfg.maa;
        match stmt {
            Stmt::Exec(i) => match self.try_dispatch(self.pc, i)? {
                Dispatch::Done => {
                    self.core_ready = self.cycle + maa.core_issue_cycles;
                    self.pc += 1;
                    Ok(true)
                }
                Dispatch::Blocked => Ok(false),
            },
            &Stmt::SetReg { reg, value } => {
                if self.is_cursor_reg(reg) && self.rng_in_flight() {
                    return Ok(false);
                }
                self.spd.set_reg(reg, value);
                self.core_ready = self.cycle + 1;
                self.pc += 1;
                Ok(true)
            }
            &Stmt::Wait { tile } => {
                self.core_ready = self.cycle + maa.core_read_cycles;
                if self.spd.tile(tile).ready() {
                    self.pc += 1;
                    return Ok(true);
                }
                Ok(false)
            }
        }
    }

    fn finished(&self) -> bool {
        self.pc == self.program.body.len()
            && self.slots.iter().all(Option::is_none)
            && self.port.idle()
    }

    fn snapshot(&self) -> String {
        let mut s = format!("core at statement {}", self.pc);
        if let Some(stmt) = self.program.body.get(self.pc) {
            s += &format!(" ({stmt:?})");
        }
        for (k, slot) in self.slots.iter().enumerate() {
            if let Some(o) = slot {
                s += &format!(
                    "; slot {k}: statement {} {} {:?}",
                    o.pc,
                    o.instr.opcode.name(),
                    o.state
                );
            }
        }
        s
    }

    fn next_wake(&self) -> Option<u64> {
        let c = self.cycle;
        let mut best: Option<u64> = None;
        let mut consider = |x: Option<u64>| {
            if let Some(x) = x.filter(|&x| x > c) {
                best = Some(best.map_or(x, |b| b.min(x)));
            }
        };
        consider(
            self.port
                .next_event()
                .map(|t| self.cfg.maa.cycle_at_or_after(t)),
        );
        if self.pc < self.program.body.len() {
            consider(Some(self.core_ready));
        }
        consider(self.stream.wake_cycle());
        consider(self.indirect.wake_cycle());
        consider(self.alu.wake_cycle());
        consider(self.fuser.wake_cycle());
        best
    }
}

/// Validates, lays out and simulates `program` on the accelerator.
pub fn run(
    program: &Program,
    image: MemoryImage,
    cfg: &SimConfig,
    opts: &RunOptions,
) -> Result<RunOutput, SimError> {
    crate::isa::validate_program(program, cfg.maa.tiles, cfg.maa.registers).map_err(|d| {
        SimError::Validation(
            d.iter()
                .map(|d| format!("{d}"))
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    cfg.dram.validate()?;
    if cfg.maa.registers < 3 || cfg.maa.tiles == 0 || cfg.maa.scoreboard_slots == 0 {
        return Err(SimError::Validation(String::from(
            "accelerator needs tiles, slots and at least 3 registers",
        )));
    }
    let arrays = ArrayTable::layout(program, &cfg.dram)?;
    let mut dram = Dram::new(cfg.dram.clone())?;
    if opts.trace {
        dram = dram.with_trace();
    }
    let mut llc = Llc::new(&cfg.llc, cfg.dram.cacheline_bytes);
    let line = cfg.dram.cacheline_bytes as u64;
    for &a in &program.warm {
        let e = arrays.get(a);
        let mut addr = e.base;
        while addr < e.base + e.bytes() {
            llc.warm(addr);
            addr += line;
        }
    }
    let llc_latency = cfg.maa.cycle_time(cfg.llc.latency_cycles);
    let mut m = Machine {
        cfg,
        program,
        arrays,
        spd: Scratchpad::new(cfg.maa.tiles, cfg.maa.tile_size, cfg.maa.registers),
        mem: image,
        port: Port::new(dram, llc, llc_latency),
        slots: (0..cfg.maa.scoreboard_slots).map(|_| None).collect(),
        seq: 0,
        stream: StreamUnit::new(cfg.maa.request_table_entries, cfg.dram.cacheline_bytes),
        indirect: IndirectUnit::new(cfg),
        alu: AluUnit::new(cfg.maa.alu_lanes),
        fuser: RangeFuser::new(cfg.maa.alu_lanes),
        stats: UnitStats::default(),
        trace: opts.trace.then(Vec::new),
        pc: 0,
        core_ready: 0,
        cycle: 0,
    };
    let mut last_progress = 0u64;
    loop {
        let now = m.now();
        let mut progressed = m.port.advance(now)?;
        progressed |= m.step_units()?;
        progressed |= m.retire();
        progressed |= m.issue()?;
        progressed |= m.core_step()?;
        if m.finished() {
            break;
        }
        if progressed {
            last_progress = m.cycle;
            m.cycle += 1;
            continue;
        }
        let next = m.next_wake();
        match next {
            Some(c) if c - last_progress <= cfg.maa.watchdog_cycles => m.cycle = c,
            _ => {
                let cycle = m.cycle;
                return Err(SimError::Deadlock {
                    cycle,
                    snapshot: m.snapshot(),
                });
            }
        }
    }
    let elapsed = m.now();
    let ds = m.port.dram.stats(elapsed);
    let mut stats = StatReport::from_dram(&opts.label, "dx100", m.cycle, &ds, &m.port.dram);
    let ps = &m.port.stats;
    stats.llc_hits = ps.llc_hits;
    stats.llc_misses = ps.llc_misses;
    stats.direct_dram = ps.direct_dram;
    stats.indirect_requests = m.stats.indirect_requests;
    stats.capacity_drains = m.stats.capacity_drains;
    stats.stream_stalls = m.stats.stream_stalls;
    let mut trace = m.trace.take().unwrap_or_default();
    trace.extend(m.port.dram.take_trace().into_iter().map(TraceEvent::Cmd));
    trace.sort_by_key(TraceEvent::time);
    Ok(RunOutput {
        image: m.mem,
        tiles: m.spd.dump(),
        registers: m.spd.registers().to_vec(),
        stats,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::ArrayInit;

    fn gather(n: u64) -> Program {
        let mut p = Program::default();
        let a = p.declare("A", DType::U32, 1 << 16, ArrayInit::Iota);
        let b = p.declare("B", DType::U32, n, ArrayInit::Iota);
        p.set_reg(0, 0);
        p.set_reg(1, n);
        p.set_reg(2, 1);
        p.exec(Instruction::sld(DType::U32, b, 0, [0, 1, 2]));
        p.exec(Instruction::ild(DType::U32, a, 1, 0));
        p.wait(1);
        p
    }

    #[test]
    fn small_gather_completes() {
        let p = gather(100);
        let out = run(
            &p,
            MemoryImage::from_program(&p),
            &SimConfig::default(),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(out.tiles[1].size, 100);
        assert_eq!(out.tiles[1].words, (0..100).collect::<Vec<u64>>());
        assert!(out.stats.cycles > 0);
    }

    #[test]
    fn wait_on_unproduced_tile_deadlocks() {
        let mut p = Program::default();
        p.wait(3);
        let mut cfg = SimConfig::default();
        cfg.maa.watchdog_cycles = 10_000;
        let e = run(&p, MemoryImage::default(), &cfg, &RunOptions::default()).unwrap_err();
        assert!(matches!(e, SimError::Deadlock { .. }), "{e}");
    }

    #[test]
    fn zero_stride_is_an_operand_error() {
        let mut p = gather(10);
        p.body[2] = Stmt::SetReg { reg: 2, value: 0 };
        let e = run(
            &p,
            MemoryImage::from_program(&p),
            &SimConfig::default(),
            &RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(e, SimError::Operand { pc: 3, .. }), "{e}");
    }

    #[test]
    fn stream_count_rounds_up() {
        assert_eq!(stream_count(0, 10, 3), 4);
        assert_eq!(stream_count(5, 5, 1), 0);
        assert_eq!(stream_count(7, 2, 1), 0);
    }
}
