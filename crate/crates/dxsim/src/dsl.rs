//! The `.dx` program text: a line-oriented listing of array declarations,
//! register writes, accelerator instructions and waits.
//!
//! ```text
//! array A u32 1024
//! init A iota
//! array B u32 256
//! init B file b.bin
//! warm B
//! reg r0 = 0
//! SLD u32 B -> t0, r0, r1, r2
//! ILD u32 A -> t1, t0 cond t2
//! WAIT t1
//! ```

use std::fmt::{self, Write as _};

use dxsim_core::isa::validate_program;
use dxsim_core::program::{ArrayInit, Stmt};
use dxsim_core::{AluOp, DType, Instruction, Opcode, Program};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A parsed program plus the source line of every body statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub program: Program,
    pub lines: Vec<usize>,
}

impl Parsed {
    /// Static checks of the parsed program, reported against source lines.
    pub fn validate(&self, tiles: usize, registers: usize) -> Result<(), Diagnostics> {
        validate_program(&self.program, tiles, registers).map_err(|ds| {
            Diagnostics(
                ds.into_iter()
                    .map(|d| Diagnostic {
                        line: self.lines.get(d.index).copied().unwrap_or(0),
                        message: d.message,
                    })
                    .collect(),
            )
        })
    }
}

struct Line<'a> {
    no: usize,
    toks: Vec<&'a str>,
    pos: usize,
}

type Res<T> = Result<T, String>;

impl<'a> Line<'a> {
    fn next(&mut self, what: &str) -> Res<&'a str> {
        let t = self
            .toks
            .get(self.pos)
            .copied()
            .ok_or_else(|| format!("expected {what}"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, tok: &str) -> Res<()> {
        match self.next(&format!("`{tok}`"))? {
            t if t == tok => Ok(()),
            t => Err(format!("expected `{tok}`, found `{t}`")),
        }
    }

    fn prefixed(&mut self, prefix: char, what: &str) -> Res<u8> {
        let t = self.next(what)?;
        t.strip_prefix(prefix)
            .and_then(|n| n.parse::<u8>().ok())
            .ok_or_else(|| format!("expected {what} like `{prefix}3`, found `{t}`"))
    }

    fn tile(&mut self) -> Res<u8> {
        self.prefixed('t', "a tile")
    }

    fn reg(&mut self) -> Res<u8> {
        self.prefixed('r', "a register")
    }

    fn dtype(&mut self) -> Res<DType> {
        let t = self.next("a data type")?;
        t.parse().map_err(|_| format!("unknown data type `{t}`"))
    }

    fn op(&mut self) -> Res<AluOp> {
        let t = self.next("an ALU operation")?;
        t.parse()
            .map_err(|_| format!("unknown ALU operation `{t}`"))
    }

    fn cond(&mut self) -> Res<Option<u8>> {
        if self.pos == self.toks.len() {
            return Ok(None);
        }
        self.expect("cond")?;
        Ok(Some(self.tile()?))
    }

    fn end(&self) -> Res<()> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(format!("unexpected `{t}`")),
        }
    }
}

fn int(t: &str) -> Res<u64> {
    let bad = || format!("expected an integer, found `{t}`");
    if let Some(h) = t.strip_prefix("0x") {
        u64::from_str_radix(h, 16).map_err(|_| bad())
    } else if t.starts_with('-') {
        t.parse::<i64>().map(|v| v as u64).map_err(|_| bad())
    } else {
        t.parse::<u64>().map_err(|_| bad())
    }
}

fn ident(t: &str) -> Res<&str> {
    let ok = t
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(t)
    } else {
        Err(format!("`{t}` is not a valid array name"))
    }
}

struct Builder {
    program: Program,
    lines: Vec<usize>,
    init_seen: Vec<bool>,
}

impl Builder {
    fn array(&self, name: &str) -> Res<u16> {
        self.program
            .array_id(name)
            .ok_or_else(|| format!("array `{name}` is not declared"))
    }

    fn statement(&mut self, l: &mut Line) -> Res<()> {
        let head = l.next("a statement")?;
        let stmt = match head {
            "array" => {
                let name = ident(l.next("an array name")?)?;
                if self.program.array_id(name).is_some() {
                    return Err(format!("array `{name}` declared twice"));
                }
                let dtype = l.dtype()?;
                let len = int(l.next("a length")?)?;
                l.end()?;
                self.program.declare(name, dtype, len, ArrayInit::Zeros);
                self.init_seen.push(false);
                return Ok(());
            }
            "init" => {
                let id = self.array(l.next("an array name")?)?;
                let init = match l.next("zeros, iota or file")? {
                    "zeros" => ArrayInit::Zeros,
                    "iota" => ArrayInit::Iota,
                    "file" => ArrayInit::File(l.next("a file path")?.to_string()),
                    t => return Err(format!("expected zeros, iota or file, found `{t}`")),
                };
                l.end()?;
                if std::mem::replace(&mut self.init_seen[id as usize], true) {
                    return Err(format!(
                        "array `{}` initialised twice",
                        self.program.arrays[id as usize].name
                    ));
                }
                self.program.arrays[id as usize].init = init;
                return Ok(());
            }
            "warm" => {
                let id = self.array(l.next("an array name")?)?;
                l.end()?;
                if !self.program.warm.contains(&id) {
                    self.program.warm.push(id);
                }
                return Ok(());
            }
            "reg" => {
                let reg = l.reg()?;
                l.expect("=")?;
                let value = int(l.next("a value")?)?;
                Stmt::SetReg { reg, value }
            }
            "WAIT" => Stmt::Wait { tile: l.tile()? },
            other => {
                let opcode: Opcode = other
                    .parse()
                    .map_err(|_| format!("unknown statement `{other}`"))?;
                Stmt::Exec(self.instruction(opcode, l)?)
            }
        };
        l.end()?;
        self.program.body.push(stmt);
        Ok(())
    }

    fn instruction(&self, opcode: Opcode, l: &mut Line) -> Res<Instruction> {
        let i = match opcode {
            Opcode::Sld | Opcode::Sst => {
                let dtype = l.dtype()?;
                let base = self.array(l.next("an array name")?)?;
                l.expect(if opcode == Opcode::Sld { "->" } else { "<-" })?;
                let t = l.tile()?;
                let regs = [l.reg()?, l.reg()?, l.reg()?];
                if opcode == Opcode::Sld {
                    Instruction::sld(dtype, base, t, regs)
                } else {
                    Instruction::sst(dtype, base, t, regs)
                }
            }
            Opcode::Ild => {
                let dtype = l.dtype()?;
                let base = self.array(l.next("an array name")?)?;
                l.expect("->")?;
                let td = l.tile()?;
                Instruction::ild(dtype, base, td, l.tile()?)
            }
            Opcode::Ist | Opcode::Irmw => {
                let dtype = l.dtype()?;
                let op = if opcode == Opcode::Irmw {
                    Some(l.op()?)
                } else {
                    None
                };
                let base = self.array(l.next("an array name")?)?;
                l.expect("<-")?;
                let (idx, val) = (l.tile()?, l.tile()?);
                match op {
                    Some(op) => Instruction::irmw(dtype, op, base, idx, val),
                    None => Instruction::ist(dtype, base, idx, val),
                }
            }
            Opcode::Aluv | Opcode::Alus => {
                let dtype = l.dtype()?;
                let op = l.op()?;
                let td = l.tile()?;
                l.expect("<-")?;
                let a = l.tile()?;
                if opcode == Opcode::Aluv {
                    Instruction::aluv(dtype, op, td, a, l.tile()?)
                } else {
                    Instruction::alus(dtype, op, td, a, l.reg()?)
                }
            }
            Opcode::Rng => {
                let (outer, inner) = (l.tile()?, l.tile()?);
                l.expect("<-")?;
                let (min, max) = (l.tile()?, l.tile()?);
                Instruction::rng(outer, inner, min, max, l.reg()?)
            }
        };
        Ok(match l.cond()? {
            Some(c) => i.with_cond(c),
            None => i,
        })
    }
}

fn tokens(text: &str) -> Vec<&str> {
    let code = text.split('#').next().unwrap_or("");
    code.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

/// Parses program text, reporting every bad line.
pub fn parse(text: &str) -> Result<Parsed, Diagnostics> {
    let mut b = Builder {
        program: Program::default(),
        lines: Vec::new(),
        init_seen: Vec::new(),
    };
    let mut errors = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        let mut l = Line {
            no: k + 1,
            toks,
            pos: 0,
        };
        let before = b.program.body.len();
        match b.statement(&mut l) {
            Ok(()) => {
                if b.program.body.len() > before {
                    b.lines.push(l.no);
                }
            }
            Err(message) => errors.push(Diagnostic {
                line: l.no,
                message,
            }),
        }
    }
    if errors.is_empty() {
        Ok(Parsed {
            program: b.program,
            lines: b.lines,
        })
    } else {
        Err(Diagnostics(errors))
    }
}

fn tile(t: Option<u8>) -> String {
    format!("t{}", t.unwrap_or(0))
}

fn reg(r: Option<u8>) -> String {
    format!("r{}", r.unwrap_or(0))
}

fn instruction(p: &Program, i: &Instruction) -> String {
    let name = |b: Option<u16>| {
        p.arrays
            .get(b.unwrap_or(0) as usize)
            .map_or("?", |a| a.name.as_str())
            .to_string()
    };
    let dt = i.dtype.map_or("?", |d| d.name());
    let op = i.op.map_or("?", |o| o.name());
    let mut s = match i.opcode {
        Opcode::Sld => format!(
            "SLD {dt} {} -> {}, {}, {}, {}",
            name(i.base),
            tile(i.td),
            reg(i.rs1),
            reg(i.rs2),
            reg(i.rs3)
        ),
        Opcode::Sst => format!(
            "SST {dt} {} <- {}, {}, {}, {}",
            name(i.base),
            tile(i.ts1),
            reg(i.rs1),
            reg(i.rs2),
            reg(i.rs3)
        ),
        Opcode::Ild => format!(
            "ILD {dt} {} -> {}, {}",
            name(i.base),
            tile(i.td),
            tile(i.ts1)
        ),
        Opcode::Ist => format!(
            "IST {dt} {} <- {}, {}",
            name(i.base),
            tile(i.ts1),
            tile(i.ts2)
        ),
        Opcode::Irmw => format!(
            "IRMW {dt} {op} {} <- {}, {}",
            name(i.base),
            tile(i.ts1),
            tile(i.ts2)
        ),
        Opcode::Aluv => format!(
            "ALUV {dt} {op} {} <- {}, {}",
            tile(i.td),
            tile(i.ts1),
            tile(i.ts2)
        ),
        Opcode::Alus => format!(
            "ALUS {dt} {op} {} <- {}, {}",
            tile(i.td),
            tile(i.ts1),
            reg(i.rs1)
        ),
        Opcode::Rng => {
            format!(
                "RNG {}, {} <- {}, {}, {}",
                tile(i.td),
                tile(i.td2),
                tile(i.ts1),
                tile(i.ts2),
                reg(i.rs1)
            )
        }
    };
    if let Some(c) = i.tc {
        s += &format!(" cond t{c}");
    }
    s
}

/// Prints `p` in the form `parse` reads back.
pub fn print(p: &Program) -> String {
    let mut s = String::new();
    for a in &p.arrays {
        let _ = writeln!(s, "array {} {} {}", a.name, a.dtype, a.len);
        match &a.init {
            ArrayInit::Zeros => {}
            ArrayInit::Iota => {
                let _ = writeln!(s, "init {} iota", a.name);
            }
            ArrayInit::File(f) => {
                let _ = writeln!(s, "init {} file {f}", a.name);
            }
        }
    }
    for &w in &p.warm {
        let _ = writeln!(s, "warm {}", p.arrays[w as usize].name);
    }
    for stmt in &p.body {
        match stmt {
            Stmt::SetReg { reg, value } => {
                let _ = writeln!(s, "reg r{reg} = {value}");
            }
            Stmt::Wait { tile } => {
                let _ = writeln!(s, "WAIT t{tile}");
            }
            Stmt::Exec(i) => {
                let _ = writeln!(s, "{}", instruction(p, i));
            }
        }
    }
    s
}
