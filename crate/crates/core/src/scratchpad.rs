//! Tiles with size, ready and per-element finish bits, and the register file.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::isa::{DType, Instruction};

/// Snapshot of one tile, as produced by the simulator and the oracle.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileData {
    pub dtype: Option<DType>,
    pub size: usize,
    pub words: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Tile {
    words: Vec<u64>,
    finish: Vec<bool>,
    size: usize,
    size_known: bool,
    dtype: Option<DType>,
    produced: bool,
    uses: u32,
}

impl Tile {
    fn new() -> Self {
        Self {
            words: Vec::new(),
            finish: Vec::new(),
            size: 0,
            size_known: false,
            dtype: None,
            produced: false,
            uses: 0,
        }
    }

    /// Produced at least once and not referenced by any in-flight instruction.
    pub fn ready(&self) -> bool {
        self.produced && self.uses == 0
    }

    pub fn size(&self) -> Option<usize> {
        self.size_known.then_some(self.size)
    }

    pub fn dtype(&self) -> Option<DType> {
        self.dtype
    }

    pub fn in_use(&self) -> bool {
        self.uses > 0
    }
}

/// The scratchpad: `tiles` tiles of `tile_size` words each plus the scalar
/// registers. Tile storage is allocated on first write.
#[derive(Clone, Debug)]
pub struct Scratchpad {
    tiles: Vec<Tile>,
    tile_size: usize,
    regs: Vec<u64>,
}

impl Scratchpad {
    pub fn new(tiles: usize, tile_size: usize, registers: usize) -> Self {
        Self {
            tiles: (0..tiles).map(|_| Tile::new()).collect(),
            tile_size,
            regs: vec![0; registers],
        }
    }

    pub fn tile_size(&self) -> usize {
        self.tile_size
    }

    pub fn tile(&self, t: u8) -> &Tile {
        &self.tiles[t as usize]
    }

    pub fn reg(&self, r: u8) -> u64 {
        self.regs[r as usize]
    }

    pub fn set_reg(&mut self, r: u8, v: u64) {
        self.regs[r as usize] = v;
    }

    pub fn registers(&self) -> &[u64] {
        &self.regs
    }

    fn alloc(&mut self, t: u8) -> &mut Tile {
        let n = self.tile_size;
        let tile = &mut self.tiles[t as usize];
        if tile.words.is_empty() {
            tile.words = vec![0; n];
            tile.finish = vec![false; n];
        }
        tile
    }

    /// Element `i` if its finish bit is set.
    pub fn read_word(&self, t: u8, i: usize) -> Option<u64> {
        let tile = &self.tiles[t as usize];
        tile.finish
            .get(i)
            .copied()
            .unwrap_or(false)
            .then(|| tile.words[i])
    }

    pub fn write_word(&mut self, t: u8, i: usize, w: u64) {
        let tile = self.alloc(t);
        tile.words[i] = w;
        tile.finish[i] = true;
    }

    /// Marks an instruction's tiles at dispatch: sources and destinations stop
    /// being ready, destination finish bits clear and destination types are set.
    pub fn dispatch_mark(&mut self, i: &Instruction, dest_types: [Option<DType>; 2]) {
        for t in i.source_tiles() {
            self.tiles[t as usize].uses += 1;
        }
        for (t, ty) in i.dest_tiles().zip(dest_types) {
            let tile = self.alloc(t);
            tile.uses += 1;
            tile.finish.iter_mut().for_each(|f| *f = false);
            tile.size_known = false;
            tile.dtype = ty;
        }
    }

    pub fn set_size(&mut self, t: u8, size: usize) {
        let tile = &mut self.tiles[t as usize];
        tile.size = size;
        tile.size_known = true;
    }

    /// Releases an instruction's tiles at retirement; destinations become
    /// produced.
    pub fn retire_mark(&mut self, i: &Instruction) {
        for t in i.source_tiles() {
            self.tiles[t as usize].uses -= 1;
        }
        for t in i.dest_tiles() {
            let tile = &mut self.tiles[t as usize];
            debug_assert!(tile.size_known, "retiring with unknown size");
            debug_assert!(
                tile.finish[..tile.size].iter().all(|&f| f),
                "retiring unfinished tile"
            );
            tile.uses -= 1;
            tile.produced = true;
        }
    }

    /// Every tile's type, size and first `size` words.
    pub fn dump(&self) -> Vec<TileData> {
        self.tiles
            .iter()
            .map(|t| TileData {
                dtype: t.dtype,
                size: t.size,
                words: t
                    .words
                    .get(..t.size)
                    .map(<[u64]>::to_vec)
                    .unwrap_or_default(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let mut s = Scratchpad::new(4, 8, 32);
        assert_eq!(s.read_word(1, 3), None);
        s.write_word(1, 3, 42);
        assert_eq!(s.read_word(1, 3), Some(42));
    }

    #[test]
    fn ready_protocol() {
        let mut s = Scratchpad::new(4, 8, 32);
        let sld = Instruction::sld(DType::U32, 0, 0, [0, 1, 2]);
        s.dispatch_mark(&sld, [Some(DType::U32), None]);
        s.set_size(0, 2);
        s.write_word(0, 0, 1);
        s.write_word(0, 1, 2);
        s.retire_mark(&sld);
        assert!(s.tile(0).ready());

        let ild = Instruction::ild(DType::U32, 0, 1, 0);
        s.dispatch_mark(&ild, [Some(DType::U32), None]);
        assert!(!s.tile(0).ready());
        assert!(!s.tile(1).ready());
        assert_eq!(s.read_word(1, 0), None);
        s.set_size(1, s.tile(0).size().unwrap());
        s.write_word(1, 0, 5);
        s.write_word(1, 1, 6);
        s.retire_mark(&ild);
        assert!(s.tile(0).ready() && s.tile(1).ready());
        assert_eq!(s.tile(1).size(), Some(2));
    }

    #[test]
    fn never_produced_is_not_ready() {
        let s = Scratchpad::new(2, 8, 32);
        assert!(!s.tile(0).ready());
        assert_eq!(s.tile(0).size(), None);
    }
}
