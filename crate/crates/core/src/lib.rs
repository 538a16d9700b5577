//! Event-driven model of a programmable data-access accelerator sitting next to
//! a DDR4 memory system.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure: the
//! caller hands in a [`program::Program`], a [`program::MemoryImage`] and a
//! [`engine::SimConfig`], and gets back the final image, the scratchpad tiles
//! and a [`engine::StatReport`]. File formats, the textual program syntax and
//! the command-line driver live in the `dxsim` crate.
//!
//! Module map:
//!
//! - [`dram`]: DDR4 bank state machine, timing constraints, FR-FCFS scheduling,
//!   address mapping and bandwidth statistics.
//! - [`isa`]: the eight accelerator instructions, their 192-bit encoding and
//!   program validation.
//! - [`scratchpad`]: tiles with size/ready/finish bits and the register file.
//! - [`indirect`]: Row Table / Word Table driven gather, scatter and
//!   read-modify-write.
//! - [`stream`]: strided loads and stores with an MSHR-like request table.
//! - [`compute`]: vector ALU and the range fuser.
//! - [`engine`]: controller, scoreboard, cache interface, modeled cores and the
//!   baseline issuer.
//! - [`oracle`]: sequential reference executor and brute-force counters.
//! - [`workloads`]: microbenchmark and randomized program generators.
//! - [`trace`]: event records and the offline DRAM timing checker.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod compute;
pub mod dram;
pub mod engine;
pub mod indirect;
pub mod isa;
pub mod llc;
pub mod oracle;
pub mod program;
pub mod scratchpad;
pub mod stream;
pub mod trace;
pub mod workloads;

/// Simulated time in picoseconds.
pub type Time = u64;

pub use engine::{SimConfig, StatReport};
pub use isa::{AluOp, DType, Instruction, Opcode};
pub use program::{MemoryImage, Program};
