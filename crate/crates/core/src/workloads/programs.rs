use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::isa::{AluOp, DType, Instruction};
use crate::program::{ArrayInit, MemoryImage, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatherKind {
    /// `A[B[i]]` into scratchpad tiles.
    GatherSpd,
    /// `C[i] = A[B[i]]`.
    GatherFull,
    /// `A[B[i]] = C[i]`.
    Scatter,
    /// `A[B[i]] += C[i]`.
    Rmw,
}

impl GatherKind {
    pub const ALL: [GatherKind; 4] = [
        GatherKind::GatherSpd,
        GatherKind::GatherFull,
        GatherKind::Scatter,
        GatherKind::Rmw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GatherKind::GatherSpd => "gather-spd",
            GatherKind::GatherFull => "gather-full",
            GatherKind::Scatter => "scatter",
            GatherKind::Rmw => "rmw",
        }
    }
}

impl core::str::FromStr for GatherKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        GatherKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(())
    }
}

/// `A` (u32, `A[k] = k`) is declared first so it sits at physical address 0,
/// `B` holds `indices`, `C` is the per-iteration operand (`C[i] = i + 1`) or
/// the gather destination.
fn arrays(kind: GatherKind, indices: &[u64], a_len: u64) -> (Program, MemoryImage) {
    let mut p = Program::default();
    let n = indices.len() as u64;
    p.declare("A", DType::U32, a_len, ArrayInit::Iota);
    p.declare("B", DType::U32, n, ArrayInit::File("B".into()));
    if kind != GatherKind::GatherSpd {
        let init = if kind == GatherKind::GatherFull {
            ArrayInit::Zeros
        } else {
            ArrayInit::File("C".into())
        };
        p.declare("C", DType::U32, n, init);
    }
    let mut img = MemoryImage::from_program(&p);
    img.arrays[1].words = indices.to_vec();
    if matches!(kind, GatherKind::Scatter | GatherKind::Rmw) {
        img.arrays[2].words = (1..=n).collect();
    }
    (p, img)
}

fn chunks(n: usize, tile: usize) -> Vec<(u64, u64)> {
    (0..n.div_ceil(tile))
        .map(|c| ((c * tile) as u64, ((c + 1) * tile).min(n) as u64))
        .collect()
}

/// Builds one of the microbenchmark kernels over `indices`, one tile at a
/// time. Consecutive chunks use alternating tiles so that a chunk's loads
/// overlap the previous chunk's indirect access.
pub fn kernel(
    kind: GatherKind,
    indices: &[u64],
    a_len: u64,
    tile_size: usize,
) -> (Program, MemoryImage) {
    match kind {
        GatherKind::GatherSpd => gather(indices, a_len, tile_size),
        GatherKind::GatherFull => gather_full(indices, a_len, tile_size),
        GatherKind::Scatter | GatherKind::Rmw => {
            let (mut p, img) = arrays(kind, indices, a_len);
            p.set_reg(2, 1);
            for (c, &(lo, hi)) in chunks(indices.len(), tile_size).iter().enumerate() {
                let (tb, tc) = ((c % 2 * 2) as u8, (c % 2 * 2 + 1) as u8);
                p.set_reg(0, lo);
                p.set_reg(1, hi);
                p.exec(Instruction::sld(DType::U32, 1, tb, [0, 1, 2]));
                p.exec(Instruction::sld(DType::U32, 2, tc, [0, 1, 2]));
                p.exec(match kind {
                    GatherKind::Scatter => Instruction::ist(DType::U32, 0, tb, tc),
                    _ => Instruction::irmw(DType::U32, AluOp::Add, 0, tb, tc),
                });
            }
            (p, img)
        }
    }
}

/// Gather of `A[indices[i]]` into tiles 1 and 3.
pub fn gather(indices: &[u64], a_len: u64, tile_size: usize) -> (Program, MemoryImage) {
    let (mut p, img) = arrays(GatherKind::GatherSpd, indices, a_len);
    p.set_reg(2, 1);
    let parts = chunks(indices.len(), tile_size);
    for (c, &(lo, hi)) in parts.iter().enumerate() {
        let (tb, ta) = ((c % 2 * 2) as u8, (c % 2 * 2 + 1) as u8);
        p.set_reg(0, lo);
        p.set_reg(1, hi);
        p.exec(Instruction::sld(DType::U32, 1, tb, [0, 1, 2]));
        p.exec(Instruction::ild(DType::U32, 0, ta, tb));
    }
    for c in parts.len().saturating_sub(2)..parts.len() {
        p.wait((c % 2 * 2 + 1) as u8);
    }
    (p, img)
}

/// `C[i] = A[indices[i]]`: each chunk's store overlaps the next chunk's
/// index load and gather.
pub fn gather_full(indices: &[u64], a_len: u64, tile_size: usize) -> (Program, MemoryImage) {
    let (mut p, img) = arrays(GatherKind::GatherFull, indices, a_len);
    p.set_reg(2, 1);
    let parts = chunks(indices.len(), tile_size);
    let tiles = |c: usize| ((c % 2 * 3) as u8, (c % 2 * 3 + 1) as u8);
    let store = |p: &mut Program, c: usize| {
        let (lo, hi) = parts[c];
        p.set_reg(3, lo);
        p.set_reg(4, hi);
        p.exec(Instruction::sst(DType::U32, 2, tiles(c).1, [3, 4, 2]));
    };
    for (c, &(lo, hi)) in parts.iter().enumerate() {
        let (tb, ta) = tiles(c);
        p.set_reg(0, lo);
        p.set_reg(1, hi);
        p.exec(Instruction::sld(DType::U32, 1, tb, [0, 1, 2]));
        if c > 0 {
            store(&mut p, c - 1);
        }
        p.exec(Instruction::ild(DType::U32, 0, ta, tb));
    }
    if !parts.is_empty() {
        store(&mut p, parts.len() - 1);
    }
    (p, img)
}
