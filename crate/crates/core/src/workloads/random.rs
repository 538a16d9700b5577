//! Random well-formed programs. Every generated program runs without errors:
//! indices come from tiles whose values are known to stay below every array
//! length, sizes are tracked so length checks hold, and only produced tiles
//! are read.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::isa::{AluOp, DType, Instruction};
use crate::program::{raw_from_int, ArrayInit, MemoryImage, Program};

/// Shape of the generated programs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    /// Scratchpad tile size the program is meant for; at most `index_bound`.
    pub tile_size: usize,
    /// Upper bound (exclusive, power of two) on every index value.
    pub index_bound: u64,
    pub tiles: u8,
    pub max_steps: usize,
    /// Register holding the outer range cursor; the inner one follows it.
    pub cursor_reg: u8,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            tile_size: 64,
            index_bound: 256,
            tiles: 8,
            max_steps: 14,
            cursor_reg: 30,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct TileInfo {
    /// `None` when the size depends on data (range fusion output).
    size: Option<usize>,
    dtype: DType,
    /// All values are integers below the index bound.
    safe: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    spec: RandomSpec,
    p: Program,
    tiles: Vec<Option<TileInfo>>,
    data: Vec<u16>,
}

impl Gen {
    fn produced(&self, f: impl Fn(&TileInfo) -> bool) -> Vec<u8> {
        (0..self.spec.tiles)
            .filter(|&t| self.tiles[t as usize].as_ref().is_some_and(&f))
            .collect()
    }

    fn pick(&mut self, v: &[u8]) -> Option<u8> {
        v.choose(&mut self.rng).copied()
    }

    fn dest(&mut self, avoid: &[u8]) -> u8 {
        loop {
            let t = self.rng.random_range(0..self.spec.tiles);
            if !avoid.contains(&t) {
                return t;
            }
        }
    }

    fn cond_for(&mut self, n: Option<usize>, avoid: &[u8]) -> Option<u8> {
        let n = n?;
        if !self.rng.random_bool(0.3) {
            return None;
        }
        let c = self.produced(|i| !i.dtype.is_float() && i.size.is_some_and(|m| m >= n));
        let c: Vec<u8> = c.into_iter().filter(|t| !avoid.contains(t)).collect();
        self.pick(&c)
    }

    fn sld(&mut self) {
        let arrays = self.p.arrays.len() as u16;
        let a = self.rng.random_range(0..arrays);
        let len = self.p.arrays[a as usize].len;
        let stride = self.rng.random_range(1..=3u64);
        let n = self
            .rng
            .random_range(1..=self.spec.tile_size as u64)
            .min((len - 1) / stride + 1);
        let start = self.rng.random_range(0..=len - 1 - (n - 1) * stride);
        let end = start + (n - 1) * stride + 1;
        let regs = [0u8, 1, 2].map(|k| k + 3 * self.rng.random_range(0..2u8));
        self.p.set_reg(regs[0], start);
        self.p.set_reg(regs[1], end);
        self.p.set_reg(regs[2], stride);
        let td = self.dest(&[]);
        let dtype = self.p.arrays[a as usize].dtype;
        let mut i = Instruction::sld(dtype, a, td, regs);
        if let Some(c) = self.cond_for(Some(n as usize), &[td]) {
            i = i.with_cond(c);
        }
        self.p.exec(i);
        self.tiles[td as usize] = Some(TileInfo {
            size: Some(n as usize),
            dtype,
            safe: a == 0,
        });
    }

    fn sst(&mut self) {
        let src = self.produced(|i| i.size.is_some());
        let Some(ts) = self.pick(&src) else { return };
        let m = self.tiles[ts as usize].unwrap().size.unwrap() as u64;
        let a = *self.data.choose(&mut self.rng).unwrap();
        let len = self.p.arrays[a as usize].len;
        let stride = self.rng.random_range(1..=2u64);
        let n = self.rng.random_range(1..=m).min((len - 1) / stride + 1);
        let start = self.rng.random_range(0..=len - 1 - (n - 1) * stride);
        self.p.set_reg(6, start);
        self.p.set_reg(7, start + (n - 1) * stride + 1);
        self.p.set_reg(8, stride);
        let dtype = self.p.arrays[a as usize].dtype;
        let mut i = Instruction::sst(dtype, a, ts, [6, 7, 8]);
        if let Some(c) = self.cond_for(Some(n as usize), &[]) {
            i = i.with_cond(c);
        }
        self.p.exec(i);
    }

    fn indirect(&mut self, kind: u32) {
        let idx = self.produced(|i| i.safe);
        let Some(ts1) = self.pick(&idx) else { return };
        let info = self.tiles[ts1 as usize].unwrap();
        let a = *self.data.choose(&mut self.rng).unwrap();
        let dtype = self.p.arrays[a as usize].dtype;
        match kind {
            0 => {
                let td = self.dest(&[ts1]);
                let mut i = Instruction::ild(dtype, a, td, ts1);
                if let Some(c) = self.cond_for(info.size, &[td]) {
                    i = i.with_cond(c);
                }
                self.p.exec(i);
                self.tiles[td as usize] = Some(TileInfo {
                    size: info.size,
                    dtype,
                    safe: false,
                });
            }
            _ => {
                let vals = match info.size {
                    Some(n) => self.produced(|i| i.size.is_some_and(|m| m >= n)),
                    None => alloc::vec![ts1],
                };
                let ts2 = self.pick(&vals).unwrap_or(ts1);
                let mut i = if kind == 1 {
                    Instruction::ist(dtype, a, ts1, ts2)
                } else {
                    let ops = [
                        AluOp::Add,
                        AluOp::Min,
                        AluOp::Max,
                        AluOp::And,
                        AluOp::Or,
                        AluOp::Xor,
                    ];
                    Instruction::irmw(dtype, *ops.choose(&mut self.rng).unwrap(), a, ts1, ts2)
                };
                if let Some(c) = self.cond_for(info.size, &[]) {
                    i = i.with_cond(c);
                }
                self.p.exec(i);
            }
        }
    }

    fn alu(&mut self, scalar: bool) {
        let src = self.produced(|_| true);
        let Some(ts1) = self.pick(&src) else { return };
        let info = self.tiles[ts1 as usize].unwrap();
        let dtype = info.dtype;
        let ops: Vec<AluOp> = AluOp::ALL
            .into_iter()
            .filter(|o| !(dtype.is_float() && o.is_shift()))
            .collect();
        let mut op = *ops.choose(&mut self.rng).unwrap();
        let mut safe = false;
        let td;
        let mut i = if scalar {
            let mut v = self.rng.random_range(0..64u64);
            if !dtype.is_float() && self.rng.random_bool(0.4) {
                // mask to a valid index
                op = AluOp::And;
                v = self.spec.index_bound - 1;
                safe = true;
            } else if dtype.is_float() {
                v = raw_from_int(dtype, v as i64);
            }
            self.p.set_reg(9, v);
            td = self.dest(&[ts1]);
            Instruction::alus(dtype, op, td, ts1, 9)
        } else {
            let same = self.produced(|j| j.size.is_some() && j.size == info.size);
            let ts2 = if info.size.is_some() {
                self.pick(&same).unwrap_or(ts1)
            } else {
                ts1
            };
            td = self.dest(&[ts1, ts2]);
            Instruction::aluv(dtype, op, td, ts1, ts2)
        };
        if let Some(c) = self.cond_for(info.size, &[td]) {
            i = i.with_cond(c);
        }
        self.p.exec(i);
        let out = crate::compute::alu_result_type(op, dtype);
        self.tiles[td as usize] = Some(TileInfo {
            size: info.size,
            dtype: out,
            safe,
        });
    }

    fn range(&mut self) {
        let src = self.produced(|i| !i.dtype.is_float());
        let Some(x) = self.pick(&src) else { return };
        let info = self.tiles[x as usize].unwrap();
        let lo = self.dest(&[x]);
        let hi = self.dest(&[x, lo]);
        self.p.set_reg(9, 7);
        self.p
            .exec(Instruction::alus(info.dtype, AluOp::And, lo, x, 9));
        self.p.set_reg(9, 15);
        self.p
            .exec(Instruction::alus(info.dtype, AluOp::And, hi, x, 9));
        let m = TileInfo {
            size: info.size,
            dtype: info.dtype,
            safe: true,
        };
        self.tiles[lo as usize] = Some(m);
        self.tiles[hi as usize] = Some(m);
        if self.rng.random_bool(0.5) {
            self.p.set_reg(self.spec.cursor_reg, 0);
            self.p.set_reg(self.spec.cursor_reg + 1, 0);
        }
        self.p.set_reg(10, self.rng.random_range(1..=3));
        let outer = self.dest(&[lo, hi]);
        let inner = self.dest(&[lo, hi, outer]);
        let mut i = Instruction::rng(outer, inner, lo, hi, 10);
        if let Some(c) = self.cond_for(info.size, &[outer, inner]) {
            i = i.with_cond(c);
        }
        self.p.exec(i);
        self.tiles[outer as usize] = Some(TileInfo {
            size: None,
            dtype: DType::U32,
            safe: true,
        });
        self.tiles[inner as usize] = Some(TileInfo {
            size: None,
            dtype: info.dtype,
            safe: true,
        });
    }
}

fn random_words(rng: &mut ChaCha8Rng, dtype: DType, len: u64, bound: Option<u64>) -> Vec<u64> {
    (0..len)
        .map(|_| match bound {
            Some(b) => rng.random_range(0..b),
            None if dtype.is_float() => raw_from_int(dtype, rng.random_range(-50..50)),
            None => rng.random::<u64>() & dtype.mask(),
        })
        .collect()
}

/// Builds a random program and its initial image. Array 0 is a u32 index
/// array with values below `spec.index_bound`; the others are data arrays of
/// random types, each at least `index_bound` long.
pub fn random_program(seed: u64, spec: &RandomSpec) -> (Program, MemoryImage) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Program::default();
    let ilen = rng.random_range(16..512);
    p.declare("I", DType::U32, ilen, ArrayInit::File("I".into()));
    let ndata = rng.random_range(1..=3);
    let mut data = Vec::new();
    for k in 0..ndata {
        let dtype = *DType::ALL.choose(&mut rng).unwrap();
        let len = rng.random_range(spec.index_bound..=4 * spec.index_bound);
        data.push(p.declare(
            &format!("D{k}"),
            dtype,
            len,
            ArrayInit::File(format!("D{k}")),
        ));
    }
    if rng.random_bool(0.3) {
        p.warm.push(data[0]);
    }
    let mut img = MemoryImage::from_program(&p);
    img.arrays[0].words = random_words(&mut rng, DType::U32, ilen, Some(spec.index_bound));
    for &d in &data {
        let a = &p.arrays[d as usize];
        img.arrays[d as usize].words = random_words(&mut rng, a.dtype, a.len, None);
    }
    let steps = rng.random_range(3..=spec.max_steps);
    let mut g = Gen {
        rng,
        spec: spec.clone(),
        p,
        tiles: alloc::vec![None; spec.tiles as usize],
        data,
    };
    g.sld();
    for _ in 0..steps {
        match g.rng.random_range(0..10u32) {
            0 | 1 => g.sld(),
            2 => g.sst(),
            3 | 4 => g.indirect(0),
            5 => g.indirect(1),
            6 => g.indirect(2),
            7 => {
                let scalar = g.rng.random_bool(0.5);
                g.alu(scalar)
            }
            8 => g.range(),
            _ => {
                let t = g.produced(|_| true);
                if let Some(t) = g.pick(&t) {
                    g.p.wait(t);
                }
            }
        }
    }
    (g.p, img)
}
