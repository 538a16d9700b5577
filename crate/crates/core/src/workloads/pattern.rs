use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WorkloadError;
use crate::dram::{DramConfig, DramCoord};

/// A DRAM access pattern: every bank gets `rows_per_bank` rows with
/// `columns` columns each, every cacheline is touched exactly once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    /// Fraction of accesses that stay in the bank's current row. Moving to
    /// the next row once a row is used up is forced, so 1.0 means "as many
    /// hits as the geometry allows".
    pub rbh: f64,
    /// Alternate channels one access at a time instead of in blocks.
    pub chi: bool,
    /// Alternate bank groups one access at a time instead of in blocks.
    pub bgi: bool,
    pub rows_per_bank: u32,
    pub columns: u32,
    /// Accesses per block when an interleaving is off.
    pub block: u32,
}

impl PatternSpec {
    pub fn new(rbh: f64, chi: bool, bgi: bool) -> Self {
        Self {
            rbh,
            chi,
            bgi,
            rows_per_bank: 16,
            columns: 128,
            block: 128,
        }
    }

    pub fn name(&self) -> alloc::string::String {
        let mut s = format!("rbh{:.1}", self.rbh);
        if self.chi {
            s += "_chi";
        }
        if self.bgi {
            s += "_bgi";
        }
        s
    }
}

/// The eight microbenchmark cells: six hit rates without interleaving, then
/// full hit rate with channel interleaving, then with both interleavings.
pub fn sweep_cells() -> Vec<PatternSpec> {
    let mut v: Vec<PatternSpec> = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        .into_iter()
        .map(|r| PatternSpec::new(r, false, false))
        .collect();
    v.push(PatternSpec::new(1.0, true, false));
    v.push(PatternSpec::new(1.0, true, true));
    v
}

/// Generated pattern: coordinates in access order.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub spec: PatternSpec,
    pub coords: Vec<DramCoord>,
}

/// Per-bank row sequence. Access `k` continues in the current row when the
/// running sum of `rbh` crosses an integer, otherwise it moves to the next
/// row that still has columns left.
fn bank_sequence(spec: &PatternSpec) -> Vec<(u32, u32)> {
    let (rows, cols) = (spec.rows_per_bank, spec.columns);
    let mut next_col = vec![0u32; rows as usize];
    let mut out = Vec::with_capacity((rows * cols) as usize);
    let mut row = 0u32;
    let mut acc = 0.0f64;
    for k in 0..rows * cols {
        if k > 0 {
            acc += spec.rbh;
            let stay = acc >= 1.0 - 1e-9;
            if stay {
                acc -= 1.0;
            }
            let left = |r: u32| next_col[r as usize] < cols;
            if !stay || !left(row) {
                let cand = (1..=rows)
                    .map(|d| (row + d) % rows)
                    .find(|&r| left(r) && r != row);
                if let Some(r) = cand {
                    row = r;
                }
            }
        }
        let c = next_col[row as usize];
        next_col[row as usize] += 1;
        out.push((row, c));
    }
    out
}

fn check(spec: &PatternSpec, dram: &DramConfig) -> Result<(), WorkloadError> {
    let bad = |m: alloc::string::String| Err(WorkloadError::Infeasible(m));
    if !(0.0..=1.0).contains(&spec.rbh) {
        return bad(format!("hit rate {} outside [0, 1]", spec.rbh));
    }
    if spec.rows_per_bank == 0 || spec.columns == 0 || spec.block == 0 {
        return bad(format!(
            "empty geometry {}x{} block {}",
            spec.rows_per_bank, spec.columns, spec.block
        ));
    }
    if spec.rows_per_bank > dram.rows || spec.columns > dram.columns_per_row {
        return bad(format!(
            "{} rows of {} columns do not fit banks of {} rows of {} columns",
            spec.rows_per_bank, spec.columns, dram.rows, dram.columns_per_row
        ));
    }
    if spec.rows_per_bank == 1 && spec.rbh < 1.0 {
        return bad(format!(
            "a single row per bank cannot miss at rate {}",
            1.0 - spec.rbh
        ));
    }
    Ok(())
}

/// Builds the access order for `spec`.
///
/// Channel and bank group are chosen by position (one at a time when the
/// interleaving is on, in blocks of `block` otherwise); banks rotate within
/// their bank group. Each bank walks its own row sequence.
pub fn generate_pattern(spec: &PatternSpec, dram: &DramConfig) -> Result<Pattern, WorkloadError> {
    check(spec, dram)?;
    let seq = bank_sequence(spec);
    let per_bank = seq.len();
    let banks_in_group = (dram.ranks * dram.banks_per_group) as usize;
    let groups = dram.bank_groups as usize;
    let channels = dram.channels as usize;
    let total = per_bank * banks_in_group * groups * channels;
    let block = spec.block as usize;
    let mut ch_count = vec![0usize; channels];
    let mut grp_count = vec![0usize; channels * groups];
    let mut bank_pos = vec![0usize; channels * groups * banks_in_group];
    let mut coords = Vec::with_capacity(total);
    for p in 0..total {
        let ch = if spec.chi {
            p % channels
        } else {
            (p / block) % channels
        };
        let q = ch_count[ch];
        ch_count[ch] += 1;
        let bg = if spec.bgi {
            q % groups
        } else {
            (q / block) % groups
        };
        let g = ch * groups + bg;
        let u = grp_count[g];
        grp_count[g] += 1;
        let b = u % banks_in_group;
        let slot = g * banks_in_group + b;
        let (row, column) = seq[bank_pos[slot]];
        bank_pos[slot] += 1;
        coords.push(DramCoord {
            channel: ch as u32,
            rank: (b / dram.banks_per_group as usize) as u32,
            bank_group: bg as u32,
            bank: (b % dram.banks_per_group as usize) as u32,
            row,
            column,
            byte_offset: 0,
        });
    }
    Ok(Pattern {
        spec: spec.clone(),
        coords,
    })
}

/// Element indices of an array of `width`-byte elements placed at physical
/// address 0 that produce `pattern`, each at a seeded random word of its line.
pub fn pattern_indices(pattern: &Pattern, dram: &DramConfig, width: u32, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_line = dram.cacheline_bytes / width;
    pattern
        .coords
        .iter()
        .map(|c| {
            let line = dram.mapping.unmap(dram, c);
            line / width as u64 + rng.random_range(0..per_line) as u64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    /// Hit rate seen per bank when each bank keeps its last row open.
    fn open_row_rbh(coords: &[DramCoord], dram: &DramConfig) -> f64 {
        let mut open = alloc::collections::BTreeMap::new();
        let mut hits = 0;
        for c in coords {
            if open.insert(c.global_bank(dram), c.row) == Some(c.row) {
                hits += 1;
            }
        }
        hits as f64 / coords.len() as f64
    }

    #[test]
    fn every_line_once() {
        let dram = DramConfig::default();
        for spec in sweep_cells() {
            let p = generate_pattern(&spec, &dram).unwrap();
            assert_eq!(p.coords.len(), 65536);
            let set: BTreeSet<_> = p.coords.iter().collect();
            assert_eq!(set.len(), 65536);
        }
    }

    #[test]
    fn hit_rate_tracks_target() {
        let dram = DramConfig::default();
        for spec in sweep_cells() {
            let p = generate_pattern(&spec, &dram).unwrap();
            let r = open_row_rbh(&p.coords, &dram);
            assert!((r - spec.rbh).abs() < 0.01, "{}: {r}", spec.name());
        }
    }

    #[test]
    fn interleaving_modes() {
        let dram = DramConfig::default();
        let p = generate_pattern(&PatternSpec::new(1.0, true, true), &dram).unwrap();
        assert_eq!(p.coords[0].channel, 0);
        assert_eq!(p.coords[1].channel, 1);
        assert_ne!(p.coords[0].bank_group, p.coords[2].bank_group);
        let p = generate_pattern(&PatternSpec::new(1.0, false, false), &dram).unwrap();
        assert!(p.coords[..128]
            .iter()
            .all(|c| c.channel == 0 && c.bank_group == 0));
        assert_eq!(p.coords[128].channel, 1);
    }

    #[test]
    fn infeasible_specs() {
        let dram = DramConfig::default();
        assert!(generate_pattern(&PatternSpec::new(1.5, false, false), &dram).is_err());
        let mut s = PatternSpec::new(0.5, false, false);
        s.columns = 1000;
        assert!(generate_pattern(&s, &dram).is_err());
        s = PatternSpec::new(0.5, false, false);
        s.rows_per_bank = 1;
        assert!(generate_pattern(&s, &dram).is_err());
    }

    #[test]
    fn indices_land_on_their_lines() {
        let dram = DramConfig::default();
        let p = generate_pattern(&PatternSpec::new(0.4, false, true), &dram).unwrap();
        let idx = pattern_indices(&p, &dram, 4, 7);
        for (k, c) in p.coords.iter().enumerate().step_by(97) {
            let got = dram.mapping.map(&dram, idx[k] * 4).unwrap().line_aligned();
            assert_eq!(got, *c);
        }
    }
}
