//! Shared last-level cache presence model: set-associative, LRU replacement,
//! write-allocate with dirty tracking, and a bounded MSHR file that merges
//! misses to the same line. Data lives in the memory image; this model only
//! decides hit, miss and writeback traffic.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlcConfig {
    pub size_bytes: u64,
    pub ways: u32,
    pub latency_cycles: u64,
    pub mshrs: usize,
}

impl Default for LlcConfig {
    fn default() -> Self {
        Self {
            size_bytes: 8 << 20,
            ways: 16,
            latency_cycles: 42,
            mshrs: 256,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Way {
    line: u64,
    stamp: u64,
    dirty: bool,
}

/// Result of presenting an access to the cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    /// Read miss that allocated a new MSHR; the line must be fetched.
    MissNew,
    /// Read miss merged into an outstanding MSHR.
    MissMerged,
    /// Write miss: line allocated dirty without a fetch.
    WriteAllocate,
    /// No MSHR available.
    Reject,
}

#[derive(Clone, Debug)]
pub struct Llc {
    sets: Vec<Vec<Way>>,
    ways: usize,
    line_bytes: u64,
    stamp: u64,
    mshr: BTreeMap<u64, Vec<u64>>,
    mshr_limit: usize,
    /// Dirty victims awaiting write-back to memory.
    pub writebacks: Vec<u64>,
}

impl Llc {
    pub fn new(cfg: &LlcConfig, line_bytes: u32) -> Self {
        let lines = (cfg.size_bytes / line_bytes as u64).max(1);
        let ways = (cfg.ways as u64).clamp(1, lines) as usize;
        let sets = (lines / ways as u64).max(1) as usize;
        Self {
            sets: (0..sets).map(|_| Vec::new()).collect(),
            ways,
            line_bytes: line_bytes as u64,
            stamp: 0,
            mshr: BTreeMap::new(),
            mshr_limit: cfg.mshrs,
            writebacks: Vec::new(),
        }
    }

    fn set_of(&self, line: u64) -> usize {
        ((line / self.line_bytes) % self.sets.len() as u64) as usize
    }

    /// Presence snoop; does not touch replacement state.
    pub fn contains(&self, line: u64) -> bool {
        self.sets[self.set_of(line)].iter().any(|w| w.line == line)
    }

    pub fn mshrs_in_use(&self) -> usize {
        self.mshr.len()
    }

    /// Whether a read to `line` would be accepted now.
    pub fn can_read(&self, line: u64) -> bool {
        self.contains(line) || self.mshr.contains_key(&line) || self.mshr.len() < self.mshr_limit
    }

    fn touch(&mut self, line: u64, dirty: bool) -> bool {
        self.stamp += 1;
        let stamp = self.stamp;
        let s = self.set_of(line);
        if let Some(w) = self.sets[s].iter_mut().find(|w| w.line == line) {
            w.stamp = stamp;
            w.dirty |= dirty;
            return true;
        }
        false
    }

    fn insert(&mut self, line: u64, dirty: bool) {
        if self.touch(line, dirty) {
            return;
        }
        let s = self.set_of(line);
        let way = Way {
            line,
            stamp: self.stamp,
            dirty,
        };
        let set = &mut self.sets[s];
        if set.len() < self.ways {
            set.push(way);
            return;
        }
        let victim = set
            .iter()
            .enumerate()
            .min_by_key(|(_, w)| w.stamp)
            .map(|(k, _)| k)
            .unwrap();
        if set[victim].dirty {
            self.writebacks.push(set[victim].line);
        }
        set[victim] = way;
    }

    /// Preloads a clean line.
    pub fn warm(&mut self, line: u64) {
        self.insert(line, false);
    }

    pub fn read(&mut self, line: u64, waiter: u64) -> Lookup {
        if self.touch(line, false) {
            return Lookup::Hit;
        }
        if let Some(w) = self.mshr.get_mut(&line) {
            w.push(waiter);
            return Lookup::MissMerged;
        }
        if self.mshr.len() >= self.mshr_limit {
            return Lookup::Reject;
        }
        self.mshr.insert(line, alloc::vec![waiter]);
        Lookup::MissNew
    }

    /// Full-line write: hit marks dirty, miss allocates dirty.
    pub fn write(&mut self, line: u64) -> Lookup {
        if self.touch(line, true) {
            Lookup::Hit
        } else {
            self.insert(line, true);
            Lookup::WriteAllocate
        }
    }

    /// Fetched data arrived: insert the line and release its waiters.
    pub fn fill(&mut self, line: u64) -> Vec<u64> {
        self.insert(line, false);
        self.mshr.remove(&line).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Llc {
        // 4 sets of 2 ways
        Llc::new(
            &LlcConfig {
                size_bytes: 8 * 64,
                ways: 2,
                latency_cycles: 1,
                mshrs: 2,
            },
            64,
        )
    }

    #[test]
    fn miss_then_hit() {
        let mut c = small();
        assert_eq!(c.read(0, 1), Lookup::MissNew);
        assert_eq!(c.read(0, 2), Lookup::MissMerged);
        assert_eq!(c.fill(0), [1, 2]);
        assert_eq!(c.read(0, 3), Lookup::Hit);
    }

    #[test]
    fn mshr_limit() {
        let mut c = small();
        assert_eq!(c.read(0, 1), Lookup::MissNew);
        assert_eq!(c.read(64, 2), Lookup::MissNew);
        assert!(!c.can_read(128));
        assert_eq!(c.read(128, 3), Lookup::Reject);
        assert!(c.can_read(64));
    }

    #[test]
    fn lru_eviction_writes_back_dirty() {
        let mut c = small();
        let stride = 4 * 64; // same set
        c.write(0);
        c.warm(stride);
        c.read(0, 0); // make line 0 most recent
        c.warm(2 * stride); // evicts `stride`, clean
        assert!(c.writebacks.is_empty());
        assert!(c.contains(0) && !c.contains(stride));
        c.warm(3 * stride); // evicts line 0, dirty
        assert_eq!(c.writebacks, [0]);
    }
}
