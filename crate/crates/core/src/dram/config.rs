use serde::{Deserialize, Serialize};

use super::mapping::AddressMapping;
use super::DramError;
use crate::Time;

/// Geometry and timing of the DDR4 subsystem.
///
/// Timing parameters are stored in picoseconds. The defaults describe a
/// two-channel DDR4-3200 system with one rank per channel, 4 bank groups of 4
/// banks, 8 KiB rows (128 cachelines) and a 32-entry request buffer per channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DramConfig {
    pub channels: u32,
    pub ranks: u32,
    pub bank_groups: u32,
    pub banks_per_group: u32,
    pub rows: u32,
    /// Row width in cachelines.
    pub columns_per_row: u32,
    pub cacheline_bytes: u32,
    pub burst_length: u32,
    pub tck: Time,
    pub trp: Time,
    pub trcd: Time,
    pub tras: Time,
    pub trtp: Time,
    pub tccd_s: Time,
    pub tccd_l: Time,
    pub request_buffer_size: usize,
    pub mapping: AddressMapping,
}

impl Default for DramConfig {
    fn default() -> Self {
        Self {
            channels: 2,
            ranks: 1,
            bank_groups: 4,
            banks_per_group: 4,
            rows: 65536,
            columns_per_row: 128,
            cacheline_bytes: 64,
            burst_length: 8,
            tck: 625,
            trp: 12_500,
            trcd: 12_500,
            tras: 32_500,
            trtp: 7_500,
            tccd_s: 2_500,
            tccd_l: 5_000,
            request_buffer_size: 32,
            mapping: AddressMapping::default(),
        }
    }
}

impl DramConfig {
    pub fn validate(&self) -> Result<(), DramError> {
        let extents = [
            ("channels", self.channels),
            ("ranks", self.ranks),
            ("bank_groups", self.bank_groups),
            ("banks_per_group", self.banks_per_group),
            ("rows", self.rows),
            ("columns_per_row", self.columns_per_row),
            ("cacheline_bytes", self.cacheline_bytes),
            ("burst_length", self.burst_length),
        ];
        for (name, v) in extents {
            if v == 0 {
                return Err(DramError::Config {
                    key: name,
                    reason: "must be non-zero",
                });
            }
        }
        if !self.cacheline_bytes.is_multiple_of(8) {
            return Err(DramError::Config {
                key: "cacheline_bytes",
                reason: "must be a multiple of 8",
            });
        }
        if !self.burst_length.is_multiple_of(2) {
            return Err(DramError::Config {
                key: "burst_length",
                reason: "must be even",
            });
        }
        if self.tck == 0 {
            return Err(DramError::Config {
                key: "tck",
                reason: "must be non-zero",
            });
        }
        if self.request_buffer_size == 0 {
            return Err(DramError::Config {
                key: "request_buffer_size",
                reason: "must be non-zero",
            });
        }
        Ok(())
    }

    /// Banks per channel (all ranks).
    pub fn banks_per_channel(&self) -> u32 {
        self.ranks * self.bank_groups * self.banks_per_group
    }

    pub fn total_banks(&self) -> u32 {
        self.channels * self.banks_per_channel()
    }

    /// Time one cacheline occupies the data bus (double data rate).
    pub fn burst_time(&self) -> Time {
        self.burst_length as Time / 2 * self.tck
    }

    /// Total addressable bytes.
    pub fn capacity(&self) -> u64 {
        self.cacheline_bytes as u64
            * self.total_banks() as u64
            * self.rows as u64
            * self.columns_per_row as u64
    }

    /// Bytes spanned by one row index across every bank and channel. Arrays are
    /// placed on multiples of this so that generators can reason about rows.
    pub fn row_stripe_bytes(&self) -> u64 {
        self.cacheline_bytes as u64 * self.total_banks() as u64 * self.columns_per_row as u64
    }

    /// Peak bandwidth of one channel in bytes per second.
    pub fn channel_peak_bytes_per_sec(&self) -> f64 {
        self.cacheline_bytes as f64 / (self.burst_time() as f64 * 1e-12)
    }

    pub fn peak_bytes_per_sec(&self) -> f64 {
        self.channel_peak_bytes_per_sec() * self.channels as f64
    }

    /// Rounds `t` up to the next command clock edge (or returns it if already on one).
    pub fn align_up(&self, t: Time) -> Time {
        t.div_ceil(self.tck) * self.tck
    }
}
