//! Reference semantics: a plain sequential interpreter with no timing, and
//! brute-force counters used to check the simulator.
//!
//! The interpreter applies statements one after another. Tile sizes, type
//! tags, register updates and errors follow the same rules as the simulator,
//! so both must produce identical memory images, tiles and registers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::compute::{alu, RangeCursor};
use crate::dram::{DramConfig, DramCoord};
use crate::engine::{dest_types, stream_count, MaaConfig, SimError};
use crate::isa::{validate_program, DType, Instruction, Opcode};
use crate::program::{MemoryImage, Program, Stmt};
use crate::scratchpad::TileData;

/// One element access in program order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Access {
    pub pc: usize,
    pub array: u16,
    pub index: u64,
    pub write: bool,
}

#[derive(Clone, Debug)]
pub struct OracleOutput {
    pub image: MemoryImage,
    pub tiles: Vec<TileData>,
    pub registers: Vec<u64>,
    /// Element accesses with a true condition, in execution order. IRMW is
    /// listed as a read.
    pub accesses: Vec<Access>,
}

#[derive(Clone, Debug, Default)]
struct OTile {
    dtype: Option<DType>,
    words: Vec<u64>,
    produced: bool,
}

struct Interp<'a> {
    cfg: &'a MaaConfig,
    mem: MemoryImage,
    tiles: Vec<OTile>,
    regs: Vec<u64>,
    accesses: Vec<Access>,
}

impl Interp<'_> {
    fn cond(&self, i: &Instruction, k: usize) -> bool {
        i.tc.is_none_or(|t| self.tiles[t as usize].words[k] != 0)
    }

    fn len(&self, t: Option<u8>) -> Option<usize> {
        t.map(|t| self.tiles[t as usize].words.len())
    }

    // iteration k drives the condition, index, value and output tiles alike
    #[allow(clippy::needless_range_loop)]
    fn exec(&mut self, pc: usize, i: &Instruction) -> Result<(), SimError> {
        let bad = |reason| Err(SimError::Operand { pc, reason });
        let regs: Vec<u64> = i.registers().map(|r| self.regs[r as usize]).collect();
        // checks made when the instruction is handed over
        if i.opcode.is_stream() {
            if regs[2] == 0 {
                return bad("stream stride is zero");
            }
            if stream_count(regs[0], regs[1], regs[2]) > self.cfg.tile_size as u64 {
                return bad("stream length exceeds the tile size");
            }
        }
        if i.opcode == Opcode::Rng && regs[0] == 0 {
            return bad("range stride is zero");
        }
        // checks made when it starts
        let n = if i.opcode.is_stream() {
            stream_count(regs[0], regs[1], regs[2]) as usize
        } else {
            self.len(i.ts1).unwrap()
        };
        if i.opcode == Opcode::Aluv || i.opcode == Opcode::Rng {
            if self.len(i.ts2) != Some(n) {
                return bad("source tiles differ in size");
            }
        } else if self.len(i.ts2).is_some_and(|m| m < n) {
            return bad("value tile shorter than the index tile");
        }
        if i.opcode == Opcode::Sst && self.len(i.ts1).unwrap() < n {
            return bad("source tile shorter than the stream");
        }
        if self.len(i.tc).is_some_and(|m| m < n) {
            return bad("condition tile shorter than the operation");
        }
        let ts1_type = i.ts1.and_then(|t| self.tiles[t as usize].dtype);
        if i.opcode == Opcode::Rng && ts1_type.is_some_and(DType::is_float) {
            return bad("range bounds must be integers");
        }
        let src = |s: &Self, t: Option<u8>, k: usize| s.tiles[t.unwrap() as usize].words[k];
        let mut out = vec![0u64; n];
        let mut out2 = Vec::new();
        match i.opcode {
            Opcode::Ild | Opcode::Ist | Opcode::Irmw => {
                let a = i.base.unwrap();
                let dtype = i.dtype.unwrap();
                let idx_type = ts1_type.filter(|d| !d.is_float());
                let Some(idx_type) = idx_type else {
                    return bad("index tile must hold integers");
                };
                let len = self.mem.array(a).words.len() as u64;
                for k in 0..n {
                    if !self.cond(i, k) {
                        continue;
                    }
                    let raw = src(self, i.ts1, k);
                    let idx = match idx_type.as_index(raw) {
                        Some(x) if x < len => x,
                        _ => {
                            let index = if idx_type == DType::I32 {
                                raw as u32 as i32 as i64 as u64
                            } else {
                                raw
                            };
                            return Err(SimError::Bounds {
                                pc,
                                iteration: k,
                                index,
                                len,
                            });
                        }
                    };
                    let write = i.opcode == Opcode::Ist;
                    self.accesses.push(Access {
                        pc,
                        array: a,
                        index: idx,
                        write,
                    });
                    let v = i.ts2.map(|t| self.tiles[t as usize].words[k]);
                    let w = &mut self.mem.array_mut(a).words[idx as usize];
                    match i.opcode {
                        Opcode::Ild => out[k] = *w,
                        Opcode::Ist => *w = v.unwrap() & dtype.mask(),
                        _ => {
                            *w = alu(i.op.unwrap(), dtype, *w, v.unwrap()).map_err(|_| {
                                SimError::Operand {
                                    pc,
                                    reason: "invalid ALU operation",
                                }
                            })?;
                        }
                    }
                }
            }
            Opcode::Sld | Opcode::Sst => {
                let a = i.base.unwrap();
                let len = self.mem.array(a).words.len() as u64;
                let mask = i.dtype.unwrap().mask();
                for k in 0..n {
                    if !self.cond(i, k) {
                        continue;
                    }
                    let e = (k as u64)
                        .checked_mul(regs[2])
                        .and_then(|d| d.checked_add(regs[0]));
                    let e = match e {
                        Some(e) if e < len => e,
                        _ => {
                            return Err(SimError::Bounds {
                                pc,
                                iteration: k,
                                index: e.unwrap_or(u64::MAX),
                                len,
                            })
                        }
                    };
                    let write = i.opcode == Opcode::Sst;
                    self.accesses.push(Access {
                        pc,
                        array: a,
                        index: e,
                        write,
                    });
                    if write {
                        self.mem.array_mut(a).words[e as usize] = src(self, i.ts1, k) & mask;
                    } else {
                        out[k] = self.mem.array(a).words[e as usize];
                    }
                }
            }
            Opcode::Aluv | Opcode::Alus => {
                for (k, o) in out.iter_mut().enumerate() {
                    if !self.cond(i, k) {
                        continue;
                    }
                    let b = if i.opcode == Opcode::Aluv {
                        src(self, i.ts2, k)
                    } else {
                        regs[0]
                    };
                    *o = alu(i.op.unwrap(), i.dtype.unwrap(), src(self, i.ts1, k), b).map_err(
                        |_| SimError::Operand {
                            pc,
                            reason: "invalid ALU operation",
                        },
                    )?;
                }
            }
            Opcode::Rng => {
                let stride = regs[0];
                let cap = self.cfg.tile_size;
                let mut cur = RangeCursor {
                    i: self.regs[self.cfg.cursor_i_reg() as usize],
                    j: self.regs[self.cfg.cursor_j_reg() as usize],
                };
                let lo = &self.tiles[i.ts1.unwrap() as usize].words;
                let hi = &self.tiles[i.ts2.unwrap() as usize].words;
                let mut pairs = Vec::new();
                let mut resume = RangeCursor::default();
                'outer: while (cur.i as usize) < n {
                    let k = cur.i as usize;
                    if self.cond(i, k) {
                        // every j of this outer element, from the cursor on
                        let mut j = cur.j.max(lo[k]);
                        while j < hi[k] {
                            if pairs.len() == cap {
                                resume = RangeCursor { i: k as u64, j };
                                break 'outer;
                            }
                            pairs.push((k as u64, j));
                            match j.checked_add(stride) {
                                Some(x) => j = x,
                                None => break,
                            }
                        }
                    }
                    cur = RangeCursor { i: cur.i + 1, j: 0 };
                }
                out = pairs.iter().map(|p| p.0).collect();
                out2 = pairs.iter().map(|p| p.1).collect();
                self.regs[self.cfg.cursor_i_reg() as usize] = resume.i;
                self.regs[self.cfg.cursor_j_reg() as usize] = resume.j;
            }
        }
        let types = dest_types(i, ts1_type);
        if let Some(td) = i.td {
            self.tiles[td as usize] = OTile {
                dtype: types[0],
                words: out,
                produced: true,
            };
        }
        if let Some(td2) = i.td2 {
            self.tiles[td2 as usize] = OTile {
                dtype: types[1],
                words: out2,
                produced: true,
            };
        }
        Ok(())
    }
}

/// Runs `program` sequentially.
pub fn oracle_run(
    program: &Program,
    image: MemoryImage,
    cfg: &MaaConfig,
) -> Result<OracleOutput, SimError> {
    validate_program(program, cfg.tiles, cfg.registers).map_err(|d| {
        SimError::Validation(
            d.iter()
                .map(|d| format!("{d}"))
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    let mut it = Interp {
        cfg,
        mem: image,
        tiles: vec![OTile::default(); cfg.tiles],
        regs: vec![0; cfg.registers],
        accesses: Vec::new(),
    };
    for (pc, stmt) in program.body.iter().enumerate() {
        match stmt {
            Stmt::SetReg { reg, value } => it.regs[*reg as usize] = *value,
            Stmt::Wait { tile } => {
                if !it.tiles[*tile as usize].produced {
                    return Err(SimError::Deadlock {
                        cycle: 0,
                        snapshot: format!(
                            "statement {pc} waits on tile t{tile}, which is never produced"
                        ),
                    });
                }
            }
            Stmt::Exec(i) => it.exec(pc, i)?,
        }
    }
    let tiles = it
        .tiles
        .into_iter()
        .map(|t| TileData {
            dtype: t.dtype,
            size: t.words.len(),
            words: t.words,
        })
        .collect();
    Ok(OracleOutput {
        image: it.mem,
        tiles,
        registers: it.regs,
        accesses: it.accesses,
    })
}

/// Number of distinct cachelines among byte addresses.
pub fn count_unique_lines(addrs: impl IntoIterator<Item = u64>, line_bytes: u64) -> usize {
    addrs
        .into_iter()
        .map(|a| a / line_bytes)
        .collect::<BTreeSet<_>>()
        .len()
}

/// Distinct DRAM rows touched per global bank, from coordinates computed by
/// the caller.
pub fn distinct_rows_per_bank(
    coords: impl IntoIterator<Item = DramCoord>,
    cfg: &DramConfig,
) -> BTreeMap<usize, usize> {
    let mut rows: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
    for c in coords {
        rows.entry(c.global_bank(cfg)).or_default().insert(c.row);
    }
    rows.into_iter().map(|(b, r)| (b, r.len())).collect()
}

/// Every `(i, j)` with `cond[i]` and `j` in `min[i]..max[i]` by `stride`, by
/// nested loops.
pub fn brute_range(min: &[u64], max: &[u64], cond: Option<&[u64]>, stride: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for i in 0..min.len().min(max.len()) {
        if cond.is_some_and(|c| c[i] == 0) {
            continue;
        }
        let mut j = min[i];
        while j < max[i] {
            out.push((i as u64, j));
            j = match j.checked_add(stride) {
                Some(x) => x,
                None => break,
            };
        }
    }
    out
}

/// Human-readable difference between two runs, or `None` when they agree.
pub fn compare_results(
    a_image: &MemoryImage,
    a_tiles: &[TileData],
    b_image: &MemoryImage,
    b_tiles: &[TileData],
) -> Option<String> {
    for (x, y) in a_image.arrays.iter().zip(&b_image.arrays) {
        if let Some(k) = x.words.iter().zip(&y.words).position(|(p, q)| p != q) {
            return Some(format!(
                "array {} differs at element {k}: {:#x} vs {:#x}",
                x.name, x.words[k], y.words[k]
            ));
        }
        if x.words.len() != y.words.len() {
            return Some(format!("array {} differs in length", x.name));
        }
    }
    for (t, (x, y)) in a_tiles.iter().zip(b_tiles).enumerate() {
        if x != y {
            return Some(format!(
                "tile t{t} differs: size {} vs {}, type {:?} vs {:?}",
                x.size, y.size, x.dtype, y.dtype
            ));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compute::range_fuse;
    use crate::program::ArrayInit;
    use proptest::prelude::*;

    #[test]
    fn gather_reads_through_indices() {
        let mut p = Program::default();
        let a = p.declare("A", DType::U32, 100, ArrayInit::Iota);
        let b = p.declare("B", DType::U32, 4, ArrayInit::Zeros);
        p.set_reg(0, 0);
        p.set_reg(1, 4);
        p.set_reg(2, 1);
        p.exec(Instruction::sld(DType::U32, b, 0, [0, 1, 2]));
        p.exec(Instruction::ild(DType::U32, a, 1, 0));
        let mut img = MemoryImage::from_program(&p);
        img.arrays[1].words = vec![7, 3, 99, 3];
        for w in &mut img.arrays[0].words {
            *w *= 10;
        }
        let out = oracle_run(&p, img, &MaaConfig::default()).unwrap();
        assert_eq!(out.tiles[1].words, [70, 30, 990, 30]);
        assert_eq!(out.accesses.len(), 8);
    }

    #[test]
    fn out_of_bounds_index() {
        let mut p = Program::default();
        let a = p.declare("A", DType::U32, 8, ArrayInit::Zeros);
        let b = p.declare("B", DType::U32, 2, ArrayInit::Iota);
        p.set_reg(1, 2);
        p.set_reg(2, 1);
        p.exec(Instruction::sld(DType::U32, b, 0, [0, 1, 2]));
        p.exec(Instruction::ild(DType::U32, a, 1, 0));
        let mut img = MemoryImage::from_program(&p);
        img.arrays[1].words[1] = 8;
        let e = oracle_run(&p, img, &MaaConfig::default()).unwrap_err();
        assert_eq!(
            e,
            SimError::Bounds {
                pc: 3,
                iteration: 1,
                index: 8,
                len: 8
            }
        );
    }

    #[test]
    fn unproduced_wait_is_reported() {
        let mut p = Program::default();
        p.wait(0);
        assert!(matches!(
            oracle_run(&p, MemoryImage::default(), &MaaConfig::default()),
            Err(SimError::Deadlock { .. })
        ));
    }

    #[test]
    fn unique_lines_and_rows() {
        assert_eq!(count_unique_lines([0, 4, 63, 64, 200], 64), 3);
        let cfg = DramConfig::default();
        let c = |bank, row| DramCoord {
            bank,
            row,
            ..DramCoord::default()
        };
        let m = distinct_rows_per_bank([c(0, 1), c(0, 1), c(0, 2), c(1, 5)], &cfg);
        assert_eq!(m[&0], 2);
        assert_eq!(m[&1], 1);
    }

    proptest! {
        #[test]
        fn fuser_matches_nested_loops(
            bounds in proptest::collection::vec((0u64..20, 0u64..20, any::<bool>()), 0..12),
            stride in 1u64..4,
            cap in 1usize..40,
        ) {
            let min: Vec<u64> = bounds.iter().map(|b| b.0).collect();
            let max: Vec<u64> = bounds.iter().map(|b| b.1).collect();
            let cond: Vec<u64> = bounds.iter().map(|b| b.2 as u64).collect();
            let expect = brute_range(&min, &max, Some(&cond), stride);
            // concatenated truncated chunks equal the full enumeration
            let mut got = Vec::new();
            let mut cur = RangeCursor::default();
            loop {
                let (chunk, next) = range_fuse(&min, &max, Some(&cond), stride, cur, cap);
                prop_assert!(chunk.len() <= cap);
                got.extend(chunk);
                if next == RangeCursor::default() {
                    break;
                }
                cur = next;
            }
            prop_assert_eq!(got, expect);
        }
    }
}
