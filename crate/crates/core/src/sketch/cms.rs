use crate::error::{Error, Result};
use crate::hashing::{derive_seed, mix64, reduce, split};
use crate::model::KeyHash;

/// Count-Min Sketch over [`KeyHash`] values with `u32` saturating counters.
///
/// Estimates never undercount. Two sketches built with the same dimensions
/// and seed merge by element-wise addition, so per-partition sketches merge
/// into exactly the sketch of the concatenated stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMinSketch {
    width: usize,
    depth: usize,
    row_seeds: Vec<u64>,
    table: Vec<u32>,
}

impl CountMinSketch {
    pub fn new(width: usize, depth: usize, seed: u64) -> Self {
        assert!(width > 0 && depth > 0, "sketch dimensions must be positive");
        let row_seeds = (0..depth as u64).map(|row| derive_seed(seed, row)).collect();
        Self { width, depth, row_seeds, table: vec![0; width * depth] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    fn slot(&self, row: usize, key: KeyHash) -> usize {
        let (lo, hi) = split(key.0);
        let h = mix64(lo ^ self.row_seeds[row]) ^ mix64(hi.wrapping_add(self.row_seeds[row]));
        row * self.width + reduce(mix64(h), self.width)
    }

    /// Adds one occurrence of `key`. Counters saturate at `u32::MAX`.
    pub fn increment(&mut self, key: KeyHash) {
        for row in 0..self.depth {
            let i = self.slot(row, key);
            self.table[i] = self.table[i].saturating_add(1);
        }
    }

    pub fn estimate(&self, key: KeyHash) -> u32 {
        (0..self.depth).map(|row| self.table[self.slot(row, key)]).min().unwrap_or(0)
    }

    pub fn is_compatible(&self, other: &Self) -> bool {
        self.width == other.width && self.depth == other.depth && self.row_seeds == other.row_seeds
    }

    /// Adds `other` into `self` counter by counter.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if !self.is_compatible(other) {
            return Err(Error::Config(format!(
                "cannot merge {}x{} sketch into {}x{} sketch with different seeds or dimensions",
                other.depth, other.width, self.depth, self.width
            )));
        }
        for (a, b) in self.table.iter_mut().zip(&other.table) {
            *a = a.saturating_add(*b);
        }
        Ok(())
    }

    pub fn counters(&self) -> &[u32] {
        &self.table
    }
}
