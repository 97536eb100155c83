use std::f64::consts::LN_2;

use crate::hashing::{derive_seed, mix64, split};
use crate::model::KeyHash;

/// Bloom filter over [`KeyHash`] values, sized from an expected insert count
/// and a target false positive rate.
///
/// Probe positions use double hashing `h1 + i * h2` over the two halves of
/// the (already uniform) 128-bit key.
#[derive(Debug, Clone, PartialEq)]
pub struct BloomFilter {
    bits: Vec<u64>,
    num_bits: u64,
    num_hashes: u32,
    seed: u64,
    capacity: usize,
    target_fpr: f64,
}

impl BloomFilter {
    /// `m = -n ln p / (ln 2)^2` bits and `k = (m / n) ln 2` hashes.
    pub fn with_rate(capacity: usize, target_fpr: f64, seed: u64) -> Self {
        assert!(target_fpr > 0.0 && target_fpr < 1.0, "target_fpr must be in (0, 1)");
        let n = capacity.max(1) as f64;
        let num_bits = (-n * target_fpr.ln() / (LN_2 * LN_2)).ceil().max(64.0) as u64;
        let num_hashes = ((num_bits as f64 / n) * LN_2).round().max(1.0) as u32;
        Self {
            bits: vec![0; num_bits.div_ceil(64) as usize],
            num_bits,
            num_hashes,
            seed,
            capacity,
            target_fpr,
        }
    }

    pub fn num_bits(&self) -> u64 {
        self.num_bits
    }

    pub fn num_hashes(&self) -> u32 {
        self.num_hashes
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn target_fpr(&self) -> f64 {
        self.target_fpr
    }

    #[inline]
    fn base_hashes(&self, key: KeyHash) -> (u64, u64) {
        let (lo, hi) = split(key.0);
        (mix64(lo ^ self.seed), mix64(hi ^ derive_seed(self.seed, 1)) | 1)
    }

    #[inline]
    fn probes(&self, key: KeyHash) -> impl Iterator<Item = u64> {
        let (h1, h2) = self.base_hashes(key);
        let m = self.num_bits;
        (0..self.num_hashes as u64).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % m)
    }

    pub fn insert(&mut self, key: KeyHash) {
        let (h1, h2) = self.base_hashes(key);
        for i in 0..self.num_hashes as u64 {
            let bit = h1.wrapping_add(i.wrapping_mul(h2)) % self.num_bits;
            self.bits[(bit / 64) as usize] |= 1 << (bit % 64);
        }
    }

    pub fn contains(&self, key: KeyHash) -> bool {
        self.probes(key).all(|bit| self.bits[(bit / 64) as usize] & (1 << (bit % 64)) != 0)
    }

    /// Bitwise OR of two filters built with the same sizing and seed.
    pub fn union(&mut self, other: &Self) {
        assert!(
            self.num_bits == other.num_bits && self.num_hashes == other.num_hashes && self.seed == other.seed,
            "bloom filters must share sizing and seed to be unioned"
        );
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }
}

/// Builds a filter holding every key in `keys`.
pub fn bloom_build(
    keys: impl IntoIterator<Item = KeyHash>,
    capacity: usize,
    target_fpr: f64,
    seed: u64,
) -> BloomFilter {
    let mut filter = BloomFilter::with_rate(capacity, target_fpr, seed);
    for k in keys {
        filter.insert(k);
    }
    filter
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn sizing_follows_standard_formulas() {
        let f = BloomFilter::with_rate(1_000, 0.01, 0);
        // -1000 ln(0.01) / ln(2)^2 = 9585.06
        assert_eq!(f.num_bits(), 9586);
        // 9.586 * ln 2 = 6.64
        assert_eq!(f.num_hashes(), 7);
        let tight = BloomFilter::with_rate(1_000, 1e-8, 0);
        assert_eq!(tight.num_hashes(), 27);
    }

    #[test]
    fn empty_filter_contains_nothing() {
        let f = bloom_build(std::iter::empty(), 10, 1e-3, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..10_000).all(|_| !f.contains(KeyHash(rng.gen()))));
    }

    #[test]
    fn no_false_negatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let keys: Vec<KeyHash> = (0..50_000).map(|_| KeyHash(rng.gen())).collect();
        let f = bloom_build(keys.iter().copied(), keys.len(), 1e-4, 9);
        assert!(keys.iter().all(|k| f.contains(*k)));
    }

    #[test]
    fn observed_fpr_is_near_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let keys: Vec<KeyHash> = (0..100_000).map(|_| KeyHash(rng.gen())).collect();
        let f = bloom_build(keys.iter().copied(), keys.len(), 1e-3, 4);
        let probes = 100_000;
        let hits = (0..probes).filter(|_| f.contains(KeyHash(rng.gen()))).count();
        let fpr = hits as f64 / probes as f64;
        assert!(fpr <= 3e-3, "observed fpr {fpr}");
    }

    #[test]
    fn union_of_partition_filters_matches_single_build() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let keys: Vec<KeyHash> = (0..4_000).map(|_| KeyHash(rng.gen())).collect();
        let whole = bloom_build(keys.iter().copied(), keys.len(), 1e-6, 1);
        let mut merged = BloomFilter::with_rate(keys.len(), 1e-6, 1);
        for part in keys.chunks(1_000) {
            merged.union(&bloom_build(part.iter().copied(), keys.len(), 1e-6, 1));
        }
        assert_eq!(merged, whole);
    }
}
