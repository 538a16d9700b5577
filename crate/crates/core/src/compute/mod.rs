//! Vector ALU semantics and the range fuser.
//!
//! Words are raw `u64` bit patterns; 32-bit types live in the low half and are
//! zero-extended. Integer arithmetic wraps at the type width. Bitwise ops on
//! floats act on the raw bits; shifts on floats are rejected.

mod units;

pub use units::{AluUnit, RangeFuser};

use crate::isa::{AluOp, DType, IsaError};

fn f32v(x: u64) -> f32 {
    f32::from_bits(x as u32)
}

fn f64v(x: u64) -> f64 {
    f64::from_bits(x)
}

fn sext(dtype: DType, x: u64) -> i64 {
    match dtype {
        DType::I32 => x as u32 as i32 as i64,
        _ => x as i64,
    }
}

fn cmp_bool(op: AluOp, o: core::cmp::Ordering) -> bool {
    use core::cmp::Ordering::*;
    match op {
        AluOp::Lt => o == Less,
        AluOp::Le => o != Greater,
        AluOp::Gt => o == Greater,
        AluOp::Ge => o != Less,
        AluOp::Eq => o == Equal,
        _ => unreachable!(),
    }
}

/// Applies `op` to two raw words of type `dtype`.
pub fn alu(op: AluOp, dtype: DType, a: u64, b: u64) -> Result<u64, IsaError> {
    let m = dtype.mask();
    let (a, b) = (a & m, b & m);
    let bits = dtype.width() * 8;
    if op.is_shift() && dtype.is_float() {
        return Err(IsaError::OpDtype { op, dtype });
    }
    if op.is_compare() {
        let r = match dtype {
            DType::F32 => f32v(a)
                .partial_cmp(&f32v(b))
                .is_some_and(|o| cmp_bool(op, o)),
            DType::F64 => f64v(a)
                .partial_cmp(&f64v(b))
                .is_some_and(|o| cmp_bool(op, o)),
            DType::I32 | DType::I64 => cmp_bool(op, sext(dtype, a).cmp(&sext(dtype, b))),
            DType::U32 | DType::U64 => cmp_bool(op, a.cmp(&b)),
        };
        return Ok(r as u64);
    }
    match op {
        AluOp::And => return Ok(a & b),
        AluOp::Or => return Ok(a | b),
        AluOp::Xor => return Ok(a ^ b),
        _ => {}
    }
    let r = match dtype {
        DType::F32 => {
            let (x, y) = (f32v(a), f32v(b));
            let v = match op {
                AluOp::Add => x + y,
                AluOp::Sub => x - y,
                AluOp::Mul => x * y,
                AluOp::Min => {
                    if y < x {
                        y
                    } else {
                        x
                    }
                }
                AluOp::Max => {
                    if y > x {
                        y
                    } else {
                        x
                    }
                }
                _ => unreachable!(),
            };
            v.to_bits() as u64
        }
        DType::F64 => {
            let (x, y) = (f64v(a), f64v(b));
            let v = match op {
                AluOp::Add => x + y,
                AluOp::Sub => x - y,
                AluOp::Mul => x * y,
                AluOp::Min => {
                    if y < x {
                        y
                    } else {
                        x
                    }
                }
                AluOp::Max => {
                    if y > x {
                        y
                    } else {
                        x
                    }
                }
                _ => unreachable!(),
            };
            v.to_bits()
        }
        _ => {
            let sh = (b % bits as u64) as u32;
            match op {
                AluOp::Add => a.wrapping_add(b),
                AluOp::Sub => a.wrapping_sub(b),
                AluOp::Mul => a.wrapping_mul(b),
                AluOp::Min if dtype.is_signed() => {
                    if sext(dtype, b) < sext(dtype, a) {
                        b
                    } else {
                        a
                    }
                }
                AluOp::Max if dtype.is_signed() => {
                    if sext(dtype, b) > sext(dtype, a) {
                        b
                    } else {
                        a
                    }
                }
                AluOp::Min => a.min(b),
                AluOp::Max => a.max(b),
                AluOp::Shl => a << sh,
                AluOp::Shr if dtype.is_signed() => (sext(dtype, a) >> sh) as u64,
                AluOp::Shr => a >> sh,
                _ => unreachable!(),
            }
        }
    };
    Ok(r & m)
}

/// Type tag of an ALU result: comparisons produce unsigned condition words.
pub fn alu_result_type(op: AluOp, dtype: DType) -> DType {
    if op.is_compare() {
        dtype.unsigned()
    } else {
        dtype
    }
}

/// Resumable state of a range fusion: the next `(i, j)` pair to consider.
///
/// A fresh fusion starts at `(0, 0)`. The inner index is raised to `min[i]`
/// whenever it lies below it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RangeCursor {
    pub i: u64,
    pub j: u64,
}

/// Outcome of looking for the next pair at outer index `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeStep {
    /// Emit this pair and continue.
    Pair(u64, u64),
    /// Outer element `i` has no (more) pairs; move to `i + 1`.
    NextOuter,
}

/// One step of the fusion at outer index `cur.i`, given that element's
/// bounds and condition. Advances the cursor past the returned pair.
pub fn range_step(cur: &mut RangeCursor, min: u64, max: u64, cond: bool, stride: u64) -> RangeStep {
    if !cond {
        cur.i += 1;
        cur.j = 0;
        return RangeStep::NextOuter;
    }
    let j = cur.j.max(min);
    if j >= max {
        cur.i += 1;
        cur.j = 0;
        return RangeStep::NextOuter;
    }
    let pair = RangeStep::Pair(cur.i, j);
    match j.checked_add(stride) {
        Some(next) if next < max => cur.j = next,
        _ => {
            cur.i += 1;
            cur.j = 0;
        }
    }
    pair
}

/// Fuses `[min[i], max[i])` ranges (step `stride`) into at most `cap` pairs,
/// starting from `start`. Returns the pairs and the cursor for the next call,
/// which is `(0, 0)` when the expansion finished.
pub fn range_fuse(
    min: &[u64],
    max: &[u64],
    cond: Option<&[u64]>,
    stride: u64,
    start: RangeCursor,
    cap: usize,
) -> (alloc::vec::Vec<(u64, u64)>, RangeCursor) {
    let n = min.len().min(max.len()) as u64;
    let mut out = alloc::vec::Vec::new();
    let mut cur = start;
    while cur.i < n {
        let i = cur.i as usize;
        let c = cond.is_none_or(|c| c[i] != 0);
        if let RangeStep::Pair(a, b) = range_step(&mut cur, min[i], max[i], c, stride) {
            if out.len() == cap {
                // resume exactly at this pair
                return (out, RangeCursor { i: a, j: b });
            }
            out.push((a, b));
        }
    }
    (out, RangeCursor::default())
}
