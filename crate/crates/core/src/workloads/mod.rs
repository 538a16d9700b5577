//! Workload generators: DRAM access patterns with a chosen row-buffer hit
//! rate and interleaving, the gather microbenchmarks built on them, and random
//! well-formed programs for differential testing.

mod pattern;
mod programs;
mod random;

use alloc::string::String;

use thiserror::Error;

pub use pattern::{generate_pattern, pattern_indices, sweep_cells, Pattern, PatternSpec};
pub use programs::{gather, gather_full, kernel, GatherKind};
pub use random::{random_program, RandomSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorkloadError {
    #[error("infeasible pattern: {0}")]
    Infeasible(String),
}
