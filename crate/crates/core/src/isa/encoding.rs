//! Fixed 192-bit instruction encoding.
//!
//! ```text
//! word0  bits 0..8    opcode   (1..=8)
//!        bits 8..12   dtype    (0 = absent, 1..=6: u32 i32 f32 u64 i64 f64)
//!        bits 12..20  op       (0 = absent, 1..=15 in AluOp order)
//!        bits 20..36  base     array identifier
//!        bits 36..64  reserved, zero
//! word1  one byte per tile operand: td, td2, ts1, ts2, tc (bytes 0..5)
//! word2  one byte per register operand: rs1, rs2, rs3 (bytes 0..3)
//! ```
//!
//! An operand byte is `0x80 | index` when present and `0` when absent.

use super::{AluOp, DType, Instruction, IsaError, Opcode};

pub type EncodedInstruction = [u64; 3];

fn operand_byte(v: Option<u8>) -> u64 {
    v.map_or(0, |i| 0x80 | i as u64)
}

fn read_operand(word: u64, byte: u32) -> Option<u8> {
    let b = (word >> (8 * byte)) as u8;
    (b & 0x80 != 0).then_some(b & 0x7f)
}

pub fn encode(i: &Instruction) -> Result<EncodedInstruction, IsaError> {
    i.check()?;
    let w0 = i.opcode.code()
        | i.dtype.map_or(0, |d| d.code()) << 8
        | i.op.map_or(0, |o| o.code()) << 12
        | (i.base.unwrap_or(0) as u64) << 20;
    let w1 = [i.td, i.td2, i.ts1, i.ts2, i.tc]
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &v)| acc | operand_byte(v) << (8 * k));
    let w2 = [i.rs1, i.rs2, i.rs3]
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &v)| acc | operand_byte(v) << (8 * k));
    Ok([w0, w1, w2])
}

/// Decodes three words. Shorter input is rejected; longer input uses only the
/// first three words.
pub fn decode(words: &[u64]) -> Result<Instruction, IsaError> {
    let [w0, w1, w2] = match words {
        [a, b, c, ..] => [*a, *b, *c],
        _ => return Err(IsaError::Truncated(words.len())),
    };
    let opcode = Opcode::from_code(w0 & 0xff).ok_or(IsaError::BadCode {
        field: "opcode",
        code: w0 & 0xff,
    })?;
    let dcode = (w0 >> 8) & 0xf;
    let dtype = match dcode {
        0 => None,
        c => Some(DType::from_code(c).ok_or(IsaError::BadCode {
            field: "dtype",
            code: c,
        })?),
    };
    let ocode = (w0 >> 12) & 0xff;
    let op = match ocode {
        0 => None,
        c => Some(AluOp::from_code(c).ok_or(IsaError::BadCode {
            field: "op",
            code: c,
        })?),
    };
    if w0 >> 36 != 0 {
        return Err(IsaError::Reserved(0));
    }
    if w1 >> 40 != 0 {
        return Err(IsaError::Reserved(1));
    }
    if w2 >> 24 != 0 {
        return Err(IsaError::Reserved(2));
    }
    let uses_base = opcode.rules()[2] == super::Presence::Required;
    let base_bits = ((w0 >> 20) & 0xffff) as u16;
    if !uses_base && base_bits != 0 {
        return Err(IsaError::Reserved(0));
    }
    let i = Instruction {
        opcode,
        dtype,
        op,
        base: uses_base.then_some(base_bits),
        td: read_operand(w1, 0),
        td2: read_operand(w1, 1),
        ts1: read_operand(w1, 2),
        ts2: read_operand(w1, 3),
        tc: read_operand(w1, 4),
        rs1: read_operand(w2, 0),
        rs2: read_operand(w2, 1),
        rs3: read_operand(w2, 2),
    };
    i.check()?;
    Ok(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{Operand, Presence};
    use proptest::prelude::*;

    #[test]
    fn golden_zero_ild() {
        let i = Instruction::ild(DType::U32, 0, 0, 0);
        assert_eq!(
            encode(&i).unwrap(),
            [0x0000_0000_0000_0101, 0x0000_0000_0080_0080, 0]
        );
    }

    #[test]
    fn golden_rng_with_condition() {
        let i = Instruction::rng(1, 2, 3, 4, 5).with_cond(6);
        assert_eq!(encode(&i).unwrap(), [0x08, 0x86_84_83_82_81, 0x85]);
    }

    #[test]
    fn bad_opcode_byte() {
        assert!(matches!(
            decode(&[0xff, 0, 0]),
            Err(IsaError::BadCode {
                field: "opcode",
                ..
            })
        ));
        assert!(matches!(
            decode(&[0, 0, 0]),
            Err(IsaError::BadCode {
                field: "opcode",
                ..
            })
        ));
    }

    #[test]
    fn bad_dtype_nibble() {
        let w0 = 0x01 | 0xf << 8;
        assert!(matches!(
            decode(&[w0, 0x80_0080, 0]),
            Err(IsaError::BadCode { field: "dtype", .. })
        ));
    }

    #[test]
    fn truncated() {
        let e = encode(&Instruction::ild(DType::U32, 0, 0, 1)).unwrap();
        assert_eq!(decode(&e[..2]), Err(IsaError::Truncated(2)));
    }

    #[test]
    fn malformed_is_not_encodable() {
        let mut i = Instruction::ild(DType::U32, 0, 0, 1);
        i.rs1 = Some(3);
        assert_eq!(
            encode(&i),
            Err(IsaError::Extra {
                opcode: Opcode::Ild,
                operand: Operand::Rs1
            })
        );
    }

    fn arb_instruction() -> impl Strategy<Value = Instruction> {
        (
            0usize..8,
            0usize..6,
            0usize..15,
            any::<u16>(),
            proptest::collection::vec(0u8..=0x7f, 8),
            any::<bool>(),
        )
            .prop_map(|(o, d, op, base, v, cond)| {
                let opcode = Opcode::ALL[o];
                let rules = opcode.rules();
                let mut i = Instruction::new(opcode);
                let want = |k: usize| {
                    rules[k] == Presence::Required || (rules[k] == Presence::Optional && cond)
                };
                if want(0) {
                    i.dtype = Some(DType::ALL[d]);
                }
                if want(1) {
                    let mut a = AluOp::ALL[op];
                    if opcode == Opcode::Irmw && !a.is_rmw() {
                        a = AluOp::Add;
                    }
                    if a.is_shift() && DType::ALL[d].is_float() {
                        a = AluOp::Xor;
                    }
                    i.op = Some(a);
                }
                if want(2) {
                    i.base = Some(base);
                }
                let slots = [
                    &mut i.td, &mut i.td2, &mut i.ts1, &mut i.ts2, &mut i.tc, &mut i.rs1,
                    &mut i.rs2, &mut i.rs3,
                ];
                for (k, slot) in slots.into_iter().enumerate() {
                    if want(k + 3) {
                        *slot = Some(v[k]);
                    }
                }
                i
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip(i in arb_instruction()) {
            let e = encode(&i).unwrap();
            prop_assert_eq!(decode(&e).unwrap(), i);
        }
    }
}
