//! Instruction set: data types, ALU operations, the eight opcodes and their
//! operand rules, plus the fixed three-word binary encoding.

mod encoding;
mod validate;

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encoding::{decode, encode, EncodedInstruction};
pub use validate::{validate_program, Diagnostic};

/// Maximum tile or register index representable in an encoded operand byte.
pub const MAX_OPERAND_INDEX: u8 = 0x7f;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    U32,
    I32,
    F32,
    U64,
    I64,
    F64,
}

impl DType {
    pub const ALL: [DType; 6] = [
        DType::U32,
        DType::I32,
        DType::F32,
        DType::U64,
        DType::I64,
        DType::F64,
    ];

    pub fn width(self) -> u32 {
        match self {
            DType::U32 | DType::I32 | DType::F32 => 4,
            DType::U64 | DType::I64 | DType::F64 => 8,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, DType::F32 | DType::F64)
    }

    pub fn is_signed(self) -> bool {
        matches!(self, DType::I32 | DType::I64)
    }

    /// Mask selecting the valid bits of a raw word.
    pub fn mask(self) -> u64 {
        if self.width() == 4 {
            0xffff_ffff
        } else {
            u64::MAX
        }
    }

    /// Unsigned type of the same width, used to tag condition words.
    pub fn unsigned(self) -> DType {
        if self.width() == 4 {
            DType::U32
        } else {
            DType::U64
        }
    }

    /// Reads a raw word as an element index. Negative signed values return `None`.
    pub fn as_index(self, raw: u64) -> Option<u64> {
        match self {
            DType::U32 | DType::U64 => Some(raw & self.mask()),
            DType::I32 => u64::try_from(raw as u32 as i32).ok(),
            DType::I64 => u64::try_from(raw as i64).ok(),
            DType::F32 | DType::F64 => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::U32 => "u32",
            DType::I32 => "i32",
            DType::F32 => "f32",
            DType::U64 => "u64",
            DType::I64 => "i64",
            DType::F64 => "f64",
        }
    }

    fn code(self) -> u64 {
        self as u64 + 1
    }

    fn from_code(c: u64) -> Option<DType> {
        DType::ALL.get((c as usize).checked_sub(1)?).copied()
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DType {
    type Err = IsaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DType::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or(IsaError::UnknownName { kind: "dtype" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AluOp {
    Add,
    Sub,
    Mul,
    Min,
    Max,
    And,
    Or,
    Xor,
    Shr,
    Shl,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl AluOp {
    pub const ALL: [AluOp; 15] = [
        AluOp::Add,
        AluOp::Sub,
        AluOp::Mul,
        AluOp::Min,
        AluOp::Max,
        AluOp::And,
        AluOp::Or,
        AluOp::Xor,
        AluOp::Shr,
        AluOp::Shl,
        AluOp::Lt,
        AluOp::Le,
        AluOp::Gt,
        AluOp::Ge,
        AluOp::Eq,
    ];

    /// Associative and commutative, so usable by IRMW.
    pub fn is_rmw(self) -> bool {
        matches!(
            self,
            AluOp::Add | AluOp::Min | AluOp::Max | AluOp::And | AluOp::Or | AluOp::Xor
        )
    }

    pub fn is_compare(self) -> bool {
        matches!(
            self,
            AluOp::Lt | AluOp::Le | AluOp::Gt | AluOp::Ge | AluOp::Eq
        )
    }

    pub fn is_shift(self) -> bool {
        matches!(self, AluOp::Shr | AluOp::Shl)
    }

    pub fn name(self) -> &'static str {
        match self {
            AluOp::Add => "ADD",
            AluOp::Sub => "SUB",
            AluOp::Mul => "MUL",
            AluOp::Min => "MIN",
            AluOp::Max => "MAX",
            AluOp::And => "AND",
            AluOp::Or => "OR",
            AluOp::Xor => "XOR",
            AluOp::Shr => "SHR",
            AluOp::Shl => "SHL",
            AluOp::Lt => "LT",
            AluOp::Le => "LE",
            AluOp::Gt => "GT",
            AluOp::Ge => "GE",
            AluOp::Eq => "EQ",
        }
    }

    fn code(self) -> u64 {
        self as u64 + 1
    }

    fn from_code(c: u64) -> Option<AluOp> {
        AluOp::ALL.get((c as usize).checked_sub(1)?).copied()
    }
}

impl fmt::Display for AluOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AluOp {
    type Err = IsaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AluOp::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or(IsaError::UnknownName { kind: "ALU op" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Opcode {
    Ild,
    Ist,
    Irmw,
    Sld,
    Sst,
    Aluv,
    Alus,
    Rng,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::Ild,
        Opcode::Ist,
        Opcode::Irmw,
        Opcode::Sld,
        Opcode::Sst,
        Opcode::Aluv,
        Opcode::Alus,
        Opcode::Rng,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Ild => "ILD",
            Opcode::Ist => "IST",
            Opcode::Irmw => "IRMW",
            Opcode::Sld => "SLD",
            Opcode::Sst => "SST",
            Opcode::Aluv => "ALUV",
            Opcode::Alus => "ALUS",
            Opcode::Rng => "RNG",
        }
    }

    pub fn is_indirect(self) -> bool {
        matches!(self, Opcode::Ild | Opcode::Ist | Opcode::Irmw)
    }

    pub fn is_stream(self) -> bool {
        matches!(self, Opcode::Sld | Opcode::Sst)
    }

    /// Writes to its base array.
    pub fn writes_memory(self) -> bool {
        matches!(self, Opcode::Ist | Opcode::Irmw | Opcode::Sst)
    }

    /// Operand presence for this opcode, in [`Operand::ALL`] order.
    pub fn rules(self) -> [Presence; 11] {
        use Presence::{Forbidden as F, Optional as O, Required as R};
        // dtype op base td td2 ts1 ts2 tc rs1 rs2 rs3
        match self {
            Opcode::Ild => [R, F, R, R, F, R, F, O, F, F, F],
            Opcode::Ist => [R, F, R, F, F, R, R, O, F, F, F],
            Opcode::Irmw => [R, R, R, F, F, R, R, O, F, F, F],
            Opcode::Sld => [R, F, R, R, F, F, F, O, R, R, R],
            Opcode::Sst => [R, F, R, F, F, R, F, O, R, R, R],
            Opcode::Aluv => [R, R, F, R, F, R, R, O, F, F, F],
            Opcode::Alus => [R, R, F, R, F, R, F, O, R, F, F],
            Opcode::Rng => [F, F, F, R, R, R, R, O, R, F, F],
        }
    }

    fn code(self) -> u64 {
        self as u64 + 1
    }

    fn from_code(c: u64) -> Option<Opcode> {
        Opcode::ALL.get((c as usize).checked_sub(1)?).copied()
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Opcode {
    type Err = IsaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Opcode::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or(IsaError::UnknownName { kind: "opcode" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Presence {
    Required,
    Optional,
    Forbidden,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Dtype,
    Op,
    Base,
    Td,
    Td2,
    Ts1,
    Ts2,
    Tc,
    Rs1,
    Rs2,
    Rs3,
}

impl Operand {
    pub const ALL: [Operand; 11] = [
        Operand::Dtype,
        Operand::Op,
        Operand::Base,
        Operand::Td,
        Operand::Td2,
        Operand::Ts1,
        Operand::Ts2,
        Operand::Tc,
        Operand::Rs1,
        Operand::Rs2,
        Operand::Rs3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operand::Dtype => "dtype",
            Operand::Op => "op",
            Operand::Base => "base",
            Operand::Td => "td",
            Operand::Td2 => "td2",
            Operand::Ts1 => "ts1",
            Operand::Ts2 => "ts2",
            Operand::Tc => "tc",
            Operand::Rs1 => "rs1",
            Operand::Rs2 => "rs2",
            Operand::Rs3 => "rs3",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsaError {
    #[error("{opcode} requires operand {}", operand.name())]
    Missing { opcode: Opcode, operand: Operand },
    #[error("{opcode} does not take operand {}", operand.name())]
    Extra { opcode: Opcode, operand: Operand },
    #[error("{0} is not associative and commutative, IRMW cannot use it")]
    NotRmw(AluOp),
    #[error("{op} is undefined for {dtype}")]
    OpDtype { op: AluOp, dtype: DType },
    #[error("operand {} index {value} exceeds {max}", operand.name())]
    IndexRange {
        operand: Operand,
        value: u32,
        max: u32,
    },
    #[error("unknown {field} code {code:#x}")]
    BadCode { field: &'static str, code: u64 },
    #[error("encoded instruction needs 3 words, got {0}")]
    Truncated(usize),
    #[error("reserved bits set in word {0}")]
    Reserved(usize),
    #[error("unknown {kind}")]
    UnknownName { kind: &'static str },
}

/// One accelerator instruction. Operands not used by the opcode are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instruction {
    pub opcode: Opcode,
    pub dtype: Option<DType>,
    pub op: Option<AluOp>,
    /// Array identifier (index into the program's array table).
    pub base: Option<u16>,
    pub td: Option<u8>,
    pub td2: Option<u8>,
    pub ts1: Option<u8>,
    pub ts2: Option<u8>,
    pub tc: Option<u8>,
    pub rs1: Option<u8>,
    pub rs2: Option<u8>,
    pub rs3: Option<u8>,
}

impl Instruction {
    pub fn new(opcode: Opcode) -> Self {
        Self {
            opcode,
            dtype: None,
            op: None,
            base: None,
            td: None,
            td2: None,
            ts1: None,
            ts2: None,
            tc: None,
            rs1: None,
            rs2: None,
            rs3: None,
        }
    }

    pub fn ild(dtype: DType, base: u16, td: u8, idx: u8) -> Self {
        Self {
            dtype: Some(dtype),
            base: Some(base),
            td: Some(td),
            ts1: Some(idx),
            ..Self::new(Opcode::Ild)
        }
    }

    pub fn ist(dtype: DType, base: u16, idx: u8, val: u8) -> Self {
        Self {
            dtype: Some(dtype),
            base: Some(base),
            ts1: Some(idx),
            ts2: Some(val),
            ..Self::new(Opcode::Ist)
        }
    }

    pub fn irmw(dtype: DType, op: AluOp, base: u16, idx: u8, val: u8) -> Self {
        Self {
            op: Some(op),
            ..Self::ist(dtype, base, idx, val)
        }
        .with_opcode(Opcode::Irmw)
    }

    pub fn sld(dtype: DType, base: u16, td: u8, regs: [u8; 3]) -> Self {
        Self {
            dtype: Some(dtype),
            base: Some(base),
            td: Some(td),
            rs1: Some(regs[0]),
            rs2: Some(regs[1]),
            rs3: Some(regs[2]),
            ..Self::new(Opcode::Sld)
        }
    }

    pub fn sst(dtype: DType, base: u16, ts: u8, regs: [u8; 3]) -> Self {
        Self {
            dtype: Some(dtype),
            base: Some(base),
            ts1: Some(ts),
            rs1: Some(regs[0]),
            rs2: Some(regs[1]),
            rs3: Some(regs[2]),
            ..Self::new(Opcode::Sst)
        }
    }

    pub fn aluv(dtype: DType, op: AluOp, td: u8, a: u8, b: u8) -> Self {
        Self {
            dtype: Some(dtype),
            op: Some(op),
            td: Some(td),
            ts1: Some(a),
            ts2: Some(b),
            ..Self::new(Opcode::Aluv)
        }
    }

    pub fn alus(dtype: DType, op: AluOp, td: u8, a: u8, rs: u8) -> Self {
        Self {
            dtype: Some(dtype),
            op: Some(op),
            td: Some(td),
            ts1: Some(a),
            rs1: Some(rs),
            ..Self::new(Opcode::Alus)
        }
    }

    pub fn rng(outer: u8, inner: u8, min: u8, max: u8, stride: u8) -> Self {
        Self {
            td: Some(outer),
            td2: Some(inner),
            ts1: Some(min),
            ts2: Some(max),
            rs1: Some(stride),
            ..Self::new(Opcode::Rng)
        }
    }

    pub fn with_cond(mut self, tc: u8) -> Self {
        self.tc = Some(tc);
        self
    }

    fn with_opcode(mut self, opcode: Opcode) -> Self {
        self.opcode = opcode;
        self
    }

    fn present(&self, o: Operand) -> bool {
        match o {
            Operand::Dtype => self.dtype.is_some(),
            Operand::Op => self.op.is_some(),
            Operand::Base => self.base.is_some(),
            Operand::Td => self.td.is_some(),
            Operand::Td2 => self.td2.is_some(),
            Operand::Ts1 => self.ts1.is_some(),
            Operand::Ts2 => self.ts2.is_some(),
            Operand::Tc => self.tc.is_some(),
            Operand::Rs1 => self.rs1.is_some(),
            Operand::Rs2 => self.rs2.is_some(),
            Operand::Rs3 => self.rs3.is_some(),
        }
    }

    /// Checks operand presence, operand ranges and op/dtype compatibility.
    pub fn check(&self) -> Result<(), IsaError> {
        let rules = self.opcode.rules();
        for (o, rule) in Operand::ALL.into_iter().zip(rules) {
            match (rule, self.present(o)) {
                (Presence::Required, false) => {
                    return Err(IsaError::Missing {
                        opcode: self.opcode,
                        operand: o,
                    });
                }
                (Presence::Forbidden, true) => {
                    return Err(IsaError::Extra {
                        opcode: self.opcode,
                        operand: o,
                    });
                }
                _ => {}
            }
        }
        let small = [
            (Operand::Td, self.td),
            (Operand::Td2, self.td2),
            (Operand::Ts1, self.ts1),
            (Operand::Ts2, self.ts2),
            (Operand::Tc, self.tc),
            (Operand::Rs1, self.rs1),
            (Operand::Rs2, self.rs2),
            (Operand::Rs3, self.rs3),
        ];
        for (operand, v) in small {
            if let Some(v) = v {
                if v > MAX_OPERAND_INDEX {
                    return Err(IsaError::IndexRange {
                        operand,
                        value: v as u32,
                        max: MAX_OPERAND_INDEX as u32,
                    });
                }
            }
        }
        if let (Some(op), Some(dtype)) = (self.op, self.dtype) {
            if self.opcode == Opcode::Irmw && !op.is_rmw() {
                return Err(IsaError::NotRmw(op));
            }
            if op.is_shift() && dtype.is_float() {
                return Err(IsaError::OpDtype { op, dtype });
            }
        }
        Ok(())
    }

    /// Tiles read by this instruction, including the condition tile.
    pub fn source_tiles(&self) -> impl Iterator<Item = u8> {
        [self.ts1, self.ts2, self.tc].into_iter().flatten()
    }

    pub fn dest_tiles(&self) -> impl Iterator<Item = u8> {
        [self.td, self.td2].into_iter().flatten()
    }

    pub fn registers(&self) -> impl Iterator<Item = u8> {
        [self.rs1, self.rs2, self.rs3].into_iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_matrix_matches_operand_lists() {
        // operand lists as printed in the instruction table
        let table: [(Opcode, &[Operand]); 8] = [
            (
                Opcode::Ild,
                &[
                    Operand::Dtype,
                    Operand::Base,
                    Operand::Td,
                    Operand::Ts1,
                    Operand::Tc,
                ],
            ),
            (
                Opcode::Ist,
                &[
                    Operand::Dtype,
                    Operand::Base,
                    Operand::Ts1,
                    Operand::Ts2,
                    Operand::Tc,
                ],
            ),
            (
                Opcode::Irmw,
                &[
                    Operand::Dtype,
                    Operand::Base,
                    Operand::Op,
                    Operand::Ts1,
                    Operand::Ts2,
                    Operand::Tc,
                ],
            ),
            (
                Opcode::Sld,
                &[
                    Operand::Dtype,
                    Operand::Base,
                    Operand::Td,
                    Operand::Rs1,
                    Operand::Rs2,
                    Operand::Rs3,
                    Operand::Tc,
                ],
            ),
            (
                Opcode::Sst,
                &[
                    Operand::Dtype,
                    Operand::Base,
                    Operand::Ts1,
                    Operand::Rs1,
                    Operand::Rs2,
                    Operand::Rs3,
                    Operand::Tc,
                ],
            ),
            (
                Opcode::Aluv,
                &[
                    Operand::Dtype,
                    Operand::Op,
                    Operand::Td,
                    Operand::Ts1,
                    Operand::Ts2,
                    Operand::Tc,
                ],
            ),
            (
                Opcode::Alus,
                &[
                    Operand::Dtype,
                    Operand::Op,
                    Operand::Td,
                    Operand::Ts1,
                    Operand::Rs1,
                    Operand::Tc,
                ],
            ),
            (
                Opcode::Rng,
                &[
                    Operand::Td,
                    Operand::Td2,
                    Operand::Ts1,
                    Operand::Ts2,
                    Operand::Rs1,
                    Operand::Tc,
                ],
            ),
        ];
        for (opcode, listed) in table {
            for (o, rule) in Operand::ALL.into_iter().zip(opcode.rules()) {
                let expect = if o == Operand::Tc {
                    Presence::Optional
                } else if listed.contains(&o) {
                    Presence::Required
                } else {
                    Presence::Forbidden
                };
                assert_eq!(rule, expect, "{opcode} {}", o.name());
            }
        }
    }

    #[test]
    fn every_missing_and_extra_operand_is_reported() {
        let full = Instruction {
            opcode: Opcode::Ild,
            dtype: Some(DType::U32),
            op: Some(AluOp::Add),
            base: Some(0),
            td: Some(1),
            td2: Some(2),
            ts1: Some(3),
            ts2: Some(4),
            tc: Some(5),
            rs1: Some(1),
            rs2: Some(2),
            rs3: Some(3),
        };
        for opcode in Opcode::ALL {
            let rules = opcode.rules();
            let mut ok = Instruction::new(opcode);
            for (o, r) in Operand::ALL.into_iter().zip(rules) {
                if r == Presence::Required {
                    copy_operand(&mut ok, &full, o);
                }
            }
            assert_eq!(ok.check(), Ok(()), "{opcode}");
            for (o, r) in Operand::ALL.into_iter().zip(rules) {
                let mut bad = ok;
                match r {
                    Presence::Required => {
                        clear_operand(&mut bad, o);
                        assert_eq!(bad.check(), Err(IsaError::Missing { opcode, operand: o }));
                    }
                    Presence::Forbidden => {
                        copy_operand(&mut bad, &full, o);
                        assert_eq!(bad.check(), Err(IsaError::Extra { opcode, operand: o }));
                    }
                    Presence::Optional => {
                        copy_operand(&mut bad, &full, o);
                        assert_eq!(bad.check(), Ok(()));
                    }
                }
            }
        }
    }

    fn copy_operand(dst: &mut Instruction, src: &Instruction, o: Operand) {
        match o {
            Operand::Dtype => dst.dtype = src.dtype,
            Operand::Op => dst.op = src.op,
            Operand::Base => dst.base = src.base,
            Operand::Td => dst.td = src.td,
            Operand::Td2 => dst.td2 = src.td2,
            Operand::Ts1 => dst.ts1 = src.ts1,
            Operand::Ts2 => dst.ts2 = src.ts2,
            Operand::Tc => dst.tc = src.tc,
            Operand::Rs1 => dst.rs1 = src.rs1,
            Operand::Rs2 => dst.rs2 = src.rs2,
            Operand::Rs3 => dst.rs3 = src.rs3,
        }
    }

    fn clear_operand(dst: &mut Instruction, o: Operand) {
        let none = Instruction::new(dst.opcode);
        copy_operand(dst, &none, o);
    }

    #[test]
    fn irmw_rejects_sub() {
        let i = Instruction::irmw(DType::U32, AluOp::Sub, 0, 1, 2);
        assert_eq!(i.check(), Err(IsaError::NotRmw(AluOp::Sub)));
        for op in AluOp::ALL.into_iter().filter(|o| o.is_rmw()) {
            assert!(Instruction::irmw(DType::U32, op, 0, 1, 2).check().is_ok());
        }
    }

    #[test]
    fn shifts_on_floats_rejected() {
        let i = Instruction::alus(DType::F32, AluOp::Shr, 0, 1, 2);
        assert!(matches!(i.check(), Err(IsaError::OpDtype { .. })));
    }

    #[test]
    fn names_round_trip() {
        for d in DType::ALL {
            assert_eq!(d.name().parse::<DType>(), Ok(d));
        }
        for o in AluOp::ALL {
            assert_eq!(o.name().parse::<AluOp>(), Ok(o));
        }
        for o in Opcode::ALL {
            assert_eq!(o.name().parse::<Opcode>(), Ok(o));
        }
    }

    #[test]
    fn signed_index_reading() {
        assert_eq!(DType::I32.as_index(0xffff_ffff), None);
        assert_eq!(DType::I32.as_index(7), Some(7));
        assert_eq!(DType::U32.as_index(0xffff_ffff), Some(0xffff_ffff));
        assert_eq!(DType::F32.as_index(1), None);
    }
}
