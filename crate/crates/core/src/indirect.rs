//! Indirect access unit: ILD, IST and IRMW over a tile of indices.
//!
//! Three stages run concurrently, each at its own rate per cycle:
//!
//! - Fill (one index per cycle): map `base + idx * width` to DRAM
//!   coordinates and record it in the Row Table slice of its bank. A row entry
//!   groups columns of one DRAM row; a column entry is one cacheline whose
//!   iterations are chained through the Word Table. The first touch of a
//!   column snoops the LLC and records the H bit.
//! - Request (one request per cycle): slices are visited round-robin,
//!   channel first, then bank group, bank and rank, so consecutive requests
//!   spread over channels and bank groups. Within a slice all columns of a row
//!   go out back to back. H=1 lines go to the LLC, the rest straight to DRAM.
//! - Response (a few words per cycle): walk the column's chain in ascending
//!   iteration order and apply each word. IST and IRMW then write the line
//!   back along the same route.
//!
//! A slice drains (sends its rows) when the fill finds no room in it, and
//! every slice drains once all indices are filled.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::compute::alu;
use crate::dram::ReqKind;
use crate::engine::config::DrainPolicy;
use crate::engine::port::{Route, UnitId, Waiter};
use crate::engine::{Ctx, Issued, Retire, SimError};
use crate::isa::{DType, Opcode};
use crate::program::ArrayEntry;
use crate::trace::TraceEvent;

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct ColEntry {
    column: u32,
    line: u64,
    h: bool,
    /// Most recent iteration touching this column.
    tail: u32,
    id: u64,
}

#[derive(Clone, Debug, Default)]
struct RowEntry {
    valid: bool,
    sent: bool,
    row: u32,
    cols: Vec<ColEntry>,
    /// Columns still waiting for their response walk.
    pending: usize,
    seq: u64,
}

#[derive(Clone, Debug, Default)]
struct Slice {
    rows: Vec<RowEntry>,
    queue: VecDeque<(u16, u8)>,
}

#[derive(Clone, Copy, Debug)]
struct WordEntry {
    prev: u32,
    offset: u16,
}

type EntryRef = (u32, u16, u8);

#[derive(Clone, Debug)]
struct IndirectOp {
    issued: Issued,
    kind: Opcode,
    entry: ArrayEntry,
    array: u16,
    idx_type: DType,
    n: usize,
    next_fill: usize,
    drained_all: bool,
    ready_at: u64,
    slices: Vec<Slice>,
    words: Vec<WordEntry>,
    tokens: BTreeMap<u64, EntryRef>,
    /// Column entries per line in creation order; a line's responses are
    /// applied in this order.
    line_order: BTreeMap<u64, VecDeque<u64>>,
    held: BTreeMap<u64, EntryRef>,
    walk: VecDeque<EntryRef>,
    walking: Option<(EntryRef, Vec<u32>, usize)>,
    write_queue: VecDeque<(u64, Route)>,
    writes_outstanding: usize,
    live_rows: usize,
    rr: usize,
    next_entry: u64,
    row_seq: u64,
}

#[derive(Clone, Debug)]
pub struct IndirectUnit {
    op: Option<IndirectOp>,
    rows: usize,
    cols: usize,
    policy: DrainPolicy,
    walk_words: usize,
    line_bytes: u64,
    /// Slice visiting order for the request generator.
    order: Vec<usize>,
    next_token: u64,
}

enum Place {
    Existing(u16, u8),
    NewColumn(u16),
    ColumnFull(u16),
    NoRow,
}

impl IndirectUnit {
    pub fn new(cfg: &crate::SimConfig) -> Self {
        let d = &cfg.dram;
        let mut order = Vec::new();
        for rank in 0..d.ranks {
            for bank in 0..d.banks_per_group {
                for bg in 0..d.bank_groups {
                    for ch in 0..d.channels {
                        let in_ch = (rank * d.bank_groups + bg) * d.banks_per_group + bank;
                        order.push((ch * d.banks_per_channel() + in_ch) as usize);
                    }
                }
            }
        }
        Self {
            op: None,
            rows: cfg.maa.row_table_rows,
            cols: cfg.maa.row_table_cols,
            policy: cfg.maa.drain_policy,
            walk_words: cfg.maa.walk_words_per_cycle,
            line_bytes: d.cacheline_bytes as u64,
            order,
            next_token: 0,
        }
    }

    pub fn busy(&self) -> bool {
        self.op.is_some()
    }

    pub fn wake_cycle(&self) -> Option<u64> {
        self.op.as_ref().map(|o| o.ready_at)
    }

    pub fn start(&mut self, issued: Issued, ctx: &mut Ctx) -> Result<(), SimError> {
        let i = issued.instr;
        let array = i.base.unwrap();
        let idx_type = ctx
            .spd
            .tile(i.ts1.unwrap())
            .dtype()
            .filter(|d| !d.is_float())
            .ok_or(SimError::Operand {
                pc: issued.pc,
                reason: "index tile must hold integers",
            })?;
        let slices = (0..ctx.cfg.dram.total_banks())
            .map(|_| Slice {
                rows: (0..self.rows).map(|_| RowEntry::default()).collect(),
                queue: VecDeque::new(),
            })
            .collect();
        self.op = Some(IndirectOp {
            kind: i.opcode,
            entry: ctx.arrays.get(array).clone(),
            array,
            idx_type,
            n: issued.n,
            next_fill: 0,
            drained_all: false,
            ready_at: ctx.cycle + ctx.cfg.maa.spd_unit_cycles,
            slices,
            words: alloc::vec![WordEntry { prev: NONE, offset: 0 }; issued.n],
            tokens: BTreeMap::new(),
            line_order: BTreeMap::new(),
            held: BTreeMap::new(),
            walk: VecDeque::new(),
            walking: None,
            write_queue: VecDeque::new(),
            writes_outstanding: 0,
            live_rows: 0,
            rr: 0,
            next_entry: 0,
            row_seq: 0,
            issued,
        });
        Ok(())
    }

    pub fn step(&mut self, ctx: &mut Ctx) -> Result<bool, SimError> {
        let Some(op) = self.op.as_ref() else {
            return Ok(false);
        };
        if ctx.cycle < op.ready_at {
            return Ok(false);
        }
        let a = self.fill(ctx)?;
        let b = self.request(ctx)?;
        let c = self.walk(ctx)?;
        Ok(a || b || c)
    }

    fn fill(&mut self, ctx: &mut Ctx) -> Result<bool, SimError> {
        let line_bytes = self.line_bytes;
        let (cols_cap, policy) = (self.cols, self.policy);
        let op = self.op.as_mut().unwrap();
        if op.next_fill == op.n {
            if !op.drained_all {
                op.drained_all = true;
                for s in 0..op.slices.len() {
                    drain(op, s, None, ctx, false);
                }
                return Ok(true);
            }
            return Ok(false);
        }
        let instr = op.issued.instr;
        let i = op.next_fill;
        let Some(raw) = ctx.spd.read_word(instr.ts1.unwrap(), i) else {
            return Ok(false);
        };
        let cond = match instr.tc {
            None => true,
            Some(tc) => match ctx.spd.read_word(tc, i) {
                None => return Ok(false),
                Some(c) => c != 0,
            },
        };
        if let Some(ts2) = instr.ts2 {
            if ctx.spd.read_word(ts2, i).is_none() {
                return Ok(false);
            }
        }
        if !cond {
            if op.kind == Opcode::Ild {
                ctx.spd.write_word(instr.td.unwrap(), i, 0);
            }
            op.next_fill += 1;
            return Ok(true);
        }
        let idx = match op.idx_type.as_index(raw) {
            Some(k) if k < op.entry.len => k,
            _ => {
                return Err(SimError::Bounds {
                    pc: op.issued.pc,
                    iteration: i,
                    index: sign_aware(op.idx_type, raw),
                    len: op.entry.len,
                })
            }
        };
        let addr = op.entry.addr(idx);
        let line = addr & !(line_bytes - 1);
        let coord = ctx.port.dram.map_address(line)?;
        let s = coord.global_bank(&ctx.cfg.dram);
        let offset = ((addr - line) / op.entry.dtype.width() as u64) as u16;
        let h = ctx.port.llc.contains(line);
        let (r, c) = match locate(op, s, coord.row, coord.column, cols_cap) {
            Place::Existing(r, c) => (r, c),
            Place::NewColumn(r) => (r, add_column(op, s, r, coord.column, line, h)),
            Place::ColumnFull(r) => {
                let only = (policy == DrainPolicy::Row).then_some(r);
                drain(op, s, only, ctx, true);
                return Ok(true);
            }
            Place::NoRow => {
                let Some(r) = op.slices[s].rows.iter().position(|r| !r.valid) else {
                    if !op.slices[s].rows.iter().any(|r| !r.sent) {
                        // every row entry is in flight: wait for a response
                        return Ok(false);
                    }
                    let only = match policy {
                        DrainPolicy::Slice => None,
                        DrainPolicy::Row => oldest_unsent(&op.slices[s]),
                    };
                    drain(op, s, only, ctx, true);
                    return Ok(true);
                };
                op.row_seq += 1;
                op.slices[s].rows[r] = RowEntry {
                    valid: true,
                    sent: false,
                    row: coord.row,
                    cols: Vec::new(),
                    pending: 0,
                    seq: op.row_seq,
                };
                op.live_rows += 1;
                let r = r as u16;
                (r, add_column(op, s, r, coord.column, line, h))
            }
        };
        let col = &mut op.slices[s].rows[r as usize].cols[c as usize];
        op.words[i] = WordEntry {
            prev: col.tail,
            offset,
        };
        col.tail = i as u32;
        op.next_fill += 1;
        Ok(true)
    }

    fn request(&mut self, ctx: &mut Ctx) -> Result<bool, SimError> {
        let op = self.op.as_mut().unwrap();
        if let Some(&(line, route)) = op.write_queue.front() {
            if ctx.port.can_send(route, ReqKind::Write, line)? {
                if route == Route::Dram && ctx.port.llc.contains(line) {
                    return Err(SimError::Internal(
                        "direct DRAM write to a line cached in the LLC",
                    ));
                }
                op.write_queue.pop_front();
                op.writes_outstanding += 1;
                self.next_token += 1;
                let t = self.next_token << 1 | 1;
                ctx.port.send(
                    ctx.now,
                    Waiter {
                        unit: UnitId::Indirect,
                        token: t,
                    },
                    ReqKind::Write,
                    line,
                    route,
                )?;
                return Ok(true);
            }
        }
        let n = self.order.len();
        for k in 0..n {
            let s = self.order[(op.rr + k) % n];
            let Some(&(r, c)) = op.slices[s].queue.front() else {
                continue;
            };
            let col = &op.slices[s].rows[r as usize].cols[c as usize];
            let route = if col.h { Route::Llc } else { Route::Dram };
            let line = col.line;
            if !ctx.port.can_send(route, ReqKind::Read, line)? {
                continue;
            }
            op.slices[s].queue.pop_front();
            op.rr = (op.rr + k + 1) % n;
            self.next_token += 1;
            let t = self.next_token << 1;
            op.tokens.insert(t, (s as u32, r, c));
            ctx.stats.indirect_requests += 1;
            if let Some(tr) = ctx.trace.as_deref_mut() {
                let coord = ctx.port.dram.map_address(line)?;
                tr.push(TraceEvent::IndirectRequest {
                    t: ctx.now,
                    pc: op.issued.pc,
                    line,
                    slice: s as u32,
                    row: coord.row,
                    column: coord.column,
                    llc: route == Route::Llc,
                });
            }
            ctx.port.send(
                ctx.now,
                Waiter {
                    unit: UnitId::Indirect,
                    token: t,
                },
                ReqKind::Read,
                line,
                route,
            )?;
            return Ok(true);
        }
        Ok(false)
    }

    pub fn respond(&mut self, token: u64, _ctx: &mut Ctx) -> Result<(), SimError> {
        let op = self
            .op
            .as_mut()
            .ok_or(SimError::Internal("indirect response while idle"))?;
        if token & 1 == 1 {
            op.writes_outstanding -= 1;
            return Ok(());
        }
        let e = op
            .tokens
            .remove(&token)
            .ok_or(SimError::Internal("response without a sent column"))?;
        let col = &op.slices[e.0 as usize].rows[e.1 as usize].cols[e.2 as usize];
        let first = op
            .line_order
            .get(&col.line)
            .and_then(|q| q.front())
            .copied();
        if first == Some(col.id) {
            op.walk.push_back(e);
        } else {
            op.held.insert(col.id, e);
        }
        Ok(())
    }

    fn walk(&mut self, ctx: &mut Ctx) -> Result<bool, SimError> {
        let line_bytes = self.line_bytes;
        let op = self.op.as_mut().unwrap();
        let instr = op.issued.instr;
        let width = op.entry.dtype.width() as u64;
        let mask = op.entry.dtype.mask();
        let mut budget = self.walk_words;
        let mut progressed = false;
        while budget > 0 {
            if op.walking.is_none() {
                let Some(e) = op.walk.pop_front() else { break };
                let col = &op.slices[e.0 as usize].rows[e.1 as usize].cols[e.2 as usize];
                let mut list = Vec::new();
                let mut it = col.tail;
                while it != NONE {
                    list.push(it);
                    it = op.words[it as usize].prev;
                }
                list.reverse();
                op.walking = Some((e, list, 0));
            }
            let (e, list, pos) = op.walking.as_mut().unwrap();
            let line = op.slices[e.0 as usize].rows[e.1 as usize].cols[e.2 as usize].line;
            while budget > 0 && *pos < list.len() {
                let i = list[*pos] as usize;
                let w = op.words[i];
                let k = ((line + w.offset as u64 * width - op.entry.base) / width) as usize;
                let words = &mut ctx.mem.array_mut(op.array).words;
                match op.kind {
                    Opcode::Ild => ctx.spd.write_word(instr.td.unwrap(), i, words[k]),
                    Opcode::Ist => {
                        words[k] = ctx.spd.read_word(instr.ts2.unwrap(), i).unwrap() & mask
                    }
                    _ => {
                        let v = ctx.spd.read_word(instr.ts2.unwrap(), i).unwrap();
                        words[k] =
                            alu(instr.op.unwrap(), op.entry.dtype, words[k], v).map_err(|_| {
                                SimError::Operand {
                                    pc: op.issued.pc,
                                    reason: "invalid ALU operation",
                                }
                            })?;
                    }
                }
                *pos += 1;
                budget -= 1;
                progressed = true;
            }
            if *pos == list.len() {
                let e = *e;
                op.walking = None;
                finish_column(op, e, line_bytes);
            }
        }
        Ok(progressed)
    }

    pub fn take_finished(&mut self) -> Option<Retire> {
        let op = self.op.as_ref()?;
        let done = op.next_fill == op.n
            && op.drained_all
            && op.live_rows == 0
            && op.write_queue.is_empty()
            && op.writes_outstanding == 0;
        if done {
            let op = self.op.take().unwrap();
            return Some(Retire::plain(op.issued.slot));
        }
        None
    }
}

fn sign_aware(t: DType, raw: u64) -> u64 {
    match t {
        DType::I32 => raw as u32 as i32 as i64 as u64,
        _ => raw,
    }
}

fn locate(op: &IndirectOp, s: usize, row: u32, column: u32, cols_cap: usize) -> Place {
    let slice = &op.slices[s];
    let Some(r) = slice
        .rows
        .iter()
        .position(|e| e.valid && !e.sent && e.row == row)
    else {
        return Place::NoRow;
    };
    let cols = &slice.rows[r].cols;
    match cols.iter().position(|c| c.column == column) {
        Some(c) => Place::Existing(r as u16, c as u8),
        None if cols.len() >= cols_cap => Place::ColumnFull(r as u16),
        None => Place::NewColumn(r as u16),
    }
}

fn add_column(op: &mut IndirectOp, s: usize, r: u16, column: u32, line: u64, h: bool) -> u8 {
    op.next_entry += 1;
    let id = op.next_entry;
    op.line_order.entry(line).or_default().push_back(id);
    let cols = &mut op.slices[s].rows[r as usize].cols;
    cols.push(ColEntry {
        column,
        line,
        h,
        tail: NONE,
        id,
    });
    (cols.len() - 1) as u8
}

fn oldest_unsent(slice: &Slice) -> Option<u16> {
    slice
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.valid && !r.sent)
        .min_by_key(|(_, r)| r.seq)
        .map(|(k, _)| k as u16)
}

/// Sends the unsent rows of slice `s` (or only row `only`), oldest first.
fn drain(op: &mut IndirectOp, s: usize, only: Option<u16>, ctx: &mut Ctx, capacity: bool) {
    let slice = &mut op.slices[s];
    let mut picked: Vec<(u64, usize)> = slice
        .rows
        .iter()
        .enumerate()
        .filter(|(k, r)| r.valid && !r.sent && only.is_none_or(|o| o as usize == *k))
        .map(|(k, r)| (r.seq, k))
        .collect();
    if picked.is_empty() {
        return;
    }
    picked.sort_unstable();
    for &(_, k) in &picked {
        let row = &mut slice.rows[k];
        row.sent = true;
        row.pending = row.cols.len();
        for c in 0..row.cols.len() {
            slice.queue.push_back((k as u16, c as u8));
        }
    }
    if capacity {
        ctx.stats.capacity_drains += 1;
    }
    if let Some(tr) = ctx.trace.as_deref_mut() {
        tr.push(TraceEvent::Drain {
            t: ctx.now,
            pc: op.issued.pc,
            slice: s as u32,
            rows: picked.len() as u32,
            capacity,
        });
    }
}

fn finish_column(op: &mut IndirectOp, e: EntryRef, _line_bytes: u64) {
    let (s, r, c) = (e.0 as usize, e.1 as usize, e.2 as usize);
    let col = op.slices[s].rows[r].cols[c].clone();
    if op.kind != Opcode::Ild {
        let route = if col.h { Route::Llc } else { Route::Dram };
        op.write_queue.push_back((col.line, route));
    }
    let row = &mut op.slices[s].rows[r];
    row.pending -= 1;
    if row.pending == 0 {
        *row = RowEntry::default();
        op.live_rows -= 1;
    }
    let q = op.line_order.get_mut(&col.line).unwrap();
    q.pop_front();
    match q.front().copied() {
        None => {
            op.line_order.remove(&col.line);
        }
        Some(next) => {
            if let Some(e) = op.held.remove(&next) {
                op.walk.push_back(e);
            }
        }
    }
}
