use serde::{Deserialize, Serialize};

use crate::dram::DramConfig;
use crate::llc::LlcConfig;
use crate::Time;

/// What the indirect unit sends when a Row Table slice runs out of room.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrainPolicy {
    /// Every valid unsent row of the slice.
    Slice,
    /// Only the row that overflowed (or the oldest unsent row when the slice
    /// has no free row entry).
    Row,
}

/// Accelerator parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaaConfig {
    pub clock_mhz: u64,
    pub tiles: usize,
    pub tile_size: usize,
    pub registers: usize,
    pub scoreboard_slots: usize,
    /// Row entries per Row Table slice.
    pub row_table_rows: usize,
    /// Column entries per row entry.
    pub row_table_cols: usize,
    pub drain_policy: DrainPolicy,
    /// Response words the indirect unit applies per cycle.
    pub walk_words_per_cycle: usize,
    pub request_table_entries: usize,
    pub alu_lanes: usize,
    /// Pipeline latency of a unit's scratchpad access, paid once at issue.
    pub spd_unit_cycles: u64,
    /// Round trip of a modeled core reading a tile's ready bit.
    pub core_read_cycles: u64,
    /// Cost of handing one instruction to the accelerator.
    pub core_issue_cycles: u64,
    /// Cycles without any progress before the run is declared deadlocked.
    pub watchdog_cycles: u64,
}

impl Default for MaaConfig {
    fn default() -> Self {
        Self {
            clock_mhz: 3200,
            tiles: 32,
            tile_size: 16384,
            registers: 32,
            scoreboard_slots: 16,
            row_table_rows: 64,
            row_table_cols: 8,
            drain_policy: DrainPolicy::Slice,
            walk_words_per_cycle: 4,
            request_table_entries: 128,
            alu_lanes: 16,
            spd_unit_cycles: 2,
            core_read_cycles: 20,
            core_issue_cycles: 3,
            watchdog_cycles: 1_000_000,
        }
    }
}

impl MaaConfig {
    /// Start time of accelerator cycle `c`.
    pub fn cycle_time(&self, c: u64) -> Time {
        (c as u128 * 1_000_000 / self.clock_mhz as u128) as Time
    }

    /// First cycle starting at or after `t`.
    pub fn cycle_at_or_after(&self, t: Time) -> u64 {
        (t as u128 * self.clock_mhz as u128).div_ceil(1_000_000) as u64
    }

    /// Register holding the outer index of a truncated range fusion.
    pub fn cursor_i_reg(&self) -> u8 {
        (self.registers - 2) as u8
    }

    pub fn cursor_j_reg(&self) -> u8 {
        (self.registers - 1) as u8
    }
}

/// Limited-MLP issuer standing in for the host cores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub cores: usize,
    pub max_outstanding: usize,
    /// Minimum cycles between two accesses of one core.
    pub issue_cycles: u64,
    /// Cycles from issue until a miss reaches the memory controller
    /// (private caches plus LLC lookup).
    pub miss_path_cycles: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            cores: 1,
            max_outstanding: 10,
            issue_cycles: 4,
            miss_path_cycles: 58,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dram: DramConfig,
    pub maa: MaaConfig,
    pub llc: LlcConfig,
    pub baseline: BaselineConfig,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dram: DramConfig::default(),
            maa: MaaConfig::default(),
            llc: LlcConfig::default(),
            baseline: BaselineConfig::default(),
            seed: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_conversion() {
        let m = MaaConfig::default();
        assert_eq!(m.cycle_time(2), 625);
        assert_eq!(m.cycle_time(1), 312);
        assert_eq!(m.cycle_at_or_after(625), 2);
        assert_eq!(m.cycle_at_or_after(626), 3);
        assert_eq!(m.cycle_at_or_after(0), 0);
        for c in 0..1000 {
            assert_eq!(m.cycle_at_or_after(m.cycle_time(c)), c);
        }
    }
}
