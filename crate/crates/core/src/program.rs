//! Programs, array declarations, memory images and the physical array layout.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dram::DramConfig;
use crate::isa::{DType, Instruction};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrayInit {
    Zeros,
    /// Element `k` holds `k` converted to the array type.
    Iota,
    /// Contents supplied by an external image file.
    File(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayDecl {
    pub name: String,
    pub dtype: DType,
    pub len: u64,
    pub init: ArrayInit,
}

/// One statement of the host-side program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stmt {
    /// Hand an instruction to the accelerator.
    Exec(Instruction),
    /// Write a scalar register.
    SetReg { reg: u8, value: u64 },
    /// Block until the tile's ready bit is set.
    Wait { tile: u8 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub arrays: Vec<ArrayDecl>,
    /// Arrays whose lines are inserted into the LLC before the run.
    pub warm: Vec<u16>,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn array_id(&self, name: &str) -> Option<u16> {
        self.arrays
            .iter()
            .position(|a| a.name == name)
            .map(|p| p as u16)
    }

    pub fn declare(&mut self, name: &str, dtype: DType, len: u64, init: ArrayInit) -> u16 {
        self.arrays.push(ArrayDecl {
            name: String::from(name),
            dtype,
            len,
            init,
        });
        (self.arrays.len() - 1) as u16
    }

    pub fn exec(&mut self, i: Instruction) {
        self.body.push(Stmt::Exec(i));
    }

    pub fn set_reg(&mut self, reg: u8, value: u64) {
        self.body.push(Stmt::SetReg { reg, value });
    }

    pub fn wait(&mut self, tile: u8) {
        self.body.push(Stmt::Wait { tile });
    }

    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.body.iter().filter_map(|s| match s {
            Stmt::Exec(i) => Some(i),
            _ => None,
        })
    }
}

/// Converts a small integer into a raw word of the given type.
pub fn raw_from_int(dtype: DType, v: i64) -> u64 {
    match dtype {
        DType::U32 | DType::I32 => v as u64 & 0xffff_ffff,
        DType::U64 | DType::I64 => v as u64,
        DType::F32 => (v as f32).to_bits() as u64,
        DType::F64 => (v as f64).to_bits(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayData {
    pub name: String,
    pub dtype: DType,
    /// Raw words; 32-bit types are zero-extended.
    pub words: Vec<u64>,
}

/// Functional contents of every declared array.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryImage {
    pub arrays: Vec<ArrayData>,
}

impl MemoryImage {
    /// Builds the initial image. `File` arrays start zeroed; the caller fills them.
    pub fn from_program(p: &Program) -> Self {
        let arrays = p
            .arrays
            .iter()
            .map(|a| {
                let words = match a.init {
                    ArrayInit::Iota => (0..a.len)
                        .map(|k| raw_from_int(a.dtype, k as i64))
                        .collect(),
                    _ => vec![0; a.len as usize],
                };
                ArrayData {
                    name: a.name.clone(),
                    dtype: a.dtype,
                    words,
                }
            })
            .collect();
        Self { arrays }
    }

    pub fn array(&self, id: u16) -> &ArrayData {
        &self.arrays[id as usize]
    }

    pub fn array_mut(&mut self, id: u16) -> &mut ArrayData {
        &mut self.arrays[id as usize]
    }

    pub fn by_name(&self, name: &str) -> Option<&ArrayData> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut ArrayData> {
        self.arrays.iter_mut().find(|a| a.name == name)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("arrays need {need} bytes but memory holds {capacity}")]
    Capacity { need: u64, capacity: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub base: u64,
    pub len: u64,
    pub dtype: DType,
    /// Some instruction writes this array.
    pub writable: bool,
}

impl ArrayEntry {
    pub fn addr(&self, idx: u64) -> u64 {
        self.base + idx * self.dtype.width() as u64
    }

    pub fn bytes(&self) -> u64 {
        self.len * self.dtype.width() as u64
    }
}

/// Registered arrays and their physical placement. Each array starts on a
/// row-stripe boundary, so element 0 maps to column 0 of row `k` in bank 0 of
/// channel 0. Ranges never overlap.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayTable {
    pub entries: Vec<ArrayEntry>,
}

impl ArrayTable {
    pub fn layout(p: &Program, cfg: &DramConfig) -> Result<Self, LayoutError> {
        let stripe = cfg.row_stripe_bytes();
        let mut next = 0u64;
        let mut entries = Vec::with_capacity(p.arrays.len());
        for (id, a) in p.arrays.iter().enumerate() {
            let writable = p
                .instructions()
                .any(|i| i.base == Some(id as u16) && i.opcode.writes_memory());
            let e = ArrayEntry {
                base: next,
                len: a.len,
                dtype: a.dtype,
                writable,
            };
            next += e.bytes().max(1).div_ceil(stripe) * stripe;
            entries.push(e);
        }
        if next > cfg.capacity() {
            return Err(LayoutError::Capacity {
                need: next,
                capacity: cfg.capacity(),
            });
        }
        Ok(Self { entries })
    }

    pub fn get(&self, id: u16) -> &ArrayEntry {
        &self.entries[id as usize]
    }

    /// Array containing a byte address.
    pub fn find(&self, addr: u64) -> Option<u16> {
        self.entries
            .iter()
            .position(|e| addr >= e.base && addr < e.base + e.bytes())
            .map(|p| p as u16)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_stripe_aligned_and_disjoint() {
        let cfg = DramConfig::default();
        let mut p = Program::default();
        p.declare("a", DType::F32, 100, ArrayInit::Zeros);
        p.declare("b", DType::U64, 70_000, ArrayInit::Iota);
        p.declare("c", DType::U32, 1, ArrayInit::Zeros);
        let t = ArrayTable::layout(&p, &cfg).unwrap();
        let s = cfg.row_stripe_bytes();
        assert_eq!(t.get(0).base, 0);
        assert_eq!(t.get(1).base, s);
        assert_eq!(t.get(2).base, s + (70_000u64 * 8).div_ceil(s) * s);
        for w in t.entries.windows(2) {
            assert!(w[0].base + w[0].bytes() <= w[1].base);
        }
        assert_eq!(t.find(s + 8), Some(1));
    }

    #[test]
    fn iota_per_type() {
        let mut p = Program::default();
        p.declare("f", DType::F64, 3, ArrayInit::Iota);
        p.declare("i", DType::I32, 3, ArrayInit::Iota);
        let m = MemoryImage::from_program(&p);
        assert_eq!(f64::from_bits(m.array(0).words[2]), 2.0);
        assert_eq!(m.array(1).words, [0, 1, 2]);
    }

    #[test]
    fn writable_flag() {
        let cfg = DramConfig::default();
        let mut p = Program::default();
        let a = p.declare("a", DType::U32, 16, ArrayInit::Zeros);
        let b = p.declare("b", DType::U32, 16, ArrayInit::Zeros);
        p.exec(Instruction::sld(DType::U32, a, 0, [0, 1, 2]));
        p.exec(Instruction::sst(DType::U32, b, 0, [0, 1, 2]));
        let t = ArrayTable::layout(&p, &cfg).unwrap();
        assert!(!t.get(a).writable);
        assert!(t.get(b).writable);
    }
}
