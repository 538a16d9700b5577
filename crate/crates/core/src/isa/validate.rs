use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::program::{Program, Stmt};

/// A problem found in a program, tied to a statement index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub index: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "statement {}: {}", self.index, self.message)
    }
}

/// Static legality checks: operand rules, declared arrays with matching types,
/// tile and register ranges, produce-before-use of tiles and no destination
/// aliasing a source.
pub fn validate_program(
    p: &Program,
    tiles: usize,
    registers: usize,
) -> Result<(), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut produced = alloc::vec![false; tiles];
    let mut push = |index: usize, message: String| diags.push(Diagnostic { index, message });
    for (k, &id) in p.warm.iter().enumerate() {
        if id as usize >= p.arrays.len() {
            push(k, format!("warm refers to undeclared array {id}"));
        }
    }
    for (index, stmt) in p.body.iter().enumerate() {
        match stmt {
            Stmt::SetReg { reg, .. } => {
                if *reg as usize >= registers {
                    push(index, format!("register r{reg} out of range"));
                }
            }
            Stmt::Wait { tile } => {
                if *tile as usize >= tiles {
                    push(index, format!("tile t{tile} out of range"));
                }
            }
            Stmt::Exec(i) => {
                if let Err(e) = i.check() {
                    push(index, format!("{e}"));
                    continue;
                }
                if let Some(b) = i.base {
                    match p.arrays.get(b as usize) {
                        None => push(index, format!("undeclared array {b}")),
                        Some(a) if Some(a.dtype) != i.dtype => push(
                            index,
                            format!(
                                "{} uses {} but array {} is {}",
                                i.opcode,
                                i.dtype.unwrap(),
                                a.name,
                                a.dtype
                            ),
                        ),
                        Some(_) => {}
                    }
                }
                let mut in_range = true;
                for t in i.source_tiles().chain(i.dest_tiles()) {
                    if t as usize >= tiles {
                        push(index, format!("tile t{t} out of range"));
                        in_range = false;
                    }
                }
                for r in i.registers() {
                    if r as usize >= registers {
                        push(index, format!("register r{r} out of range"));
                    }
                }
                if !in_range {
                    continue;
                }
                for t in i.source_tiles() {
                    if !produced[t as usize] {
                        push(index, format!("tile t{t} read before produce"));
                    }
                }
                for d in i.dest_tiles() {
                    if i.source_tiles().any(|s| s == d) {
                        push(index, format!("destination t{d} is also a source"));
                    }
                }
                if i.td.is_some() && i.td == i.td2 {
                    push(index, String::from("both destinations name the same tile"));
                }
                for d in i.dest_tiles() {
                    produced[d as usize] = true;
                }
            }
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}
