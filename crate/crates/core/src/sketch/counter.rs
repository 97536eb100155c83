use rustc_hash::{FxHashMap, FxHashSet};

use super::{BloomFilter, CountMinSketch};
use crate::error::Result;
use crate::model::{Approximation, EngineParams, KeyHash};

/// Block-size counter used by rough over-size detection.
#[derive(Debug, Clone)]
pub enum SizeCounter {
    Sketch(CountMinSketch),
    Exact(FxHashMap<KeyHash, u32>),
}

impl SizeCounter {
    /// An empty counter for one partition. Every partition of the same run
    /// gets identically seeded sketches so they merge.
    pub fn for_params(params: &EngineParams, iteration: usize) -> Self {
        match params.approximation {
            Approximation::Sketch => SizeCounter::Sketch(CountMinSketch::new(
                params.cms_width,
                params.cms_depth,
                crate::hashing::derive_seed(params.seed, iteration as u64),
            )),
            Approximation::Exact => SizeCounter::Exact(FxHashMap::default()),
        }
    }

    pub fn increment(&mut self, key: KeyHash) {
        match self {
            SizeCounter::Sketch(s) => s.increment(key),
            SizeCounter::Exact(m) => *m.entry(key).or_default() += 1,
        }
    }

    /// Upper bound on the number of increments seen for `key`.
    pub fn estimate(&self, key: KeyHash) -> u32 {
        match self {
            SizeCounter::Sketch(s) => s.estimate(key),
            SizeCounter::Exact(m) => m.get(&key).copied().unwrap_or(0),
        }
    }

    pub fn merge(mut self, other: Self) -> Result<Self> {
        match (&mut self, other) {
            (SizeCounter::Sketch(a), SizeCounter::Sketch(b)) => a.merge(&b)?,
            (SizeCounter::Exact(a), SizeCounter::Exact(b)) => {
                for (k, c) in b {
                    *a.entry(k).or_default() += c;
                }
            }
            _ => {
                return Err(crate::error::Error::Config(
                    "cannot merge an exact counter with a sketch".to_string(),
                ))
            }
        }
        Ok(self)
    }
}

/// "Is this key possibly over-sized?" membership test.
#[derive(Debug, Clone)]
pub enum OversizeFilter {
    Bloom(BloomFilter),
    Exact(FxHashSet<KeyHash>),
}

impl OversizeFilter {
    pub fn build(keys: &[KeyHash], params: &EngineParams, iteration: usize) -> Self {
        match params.approximation {
            Approximation::Sketch => OversizeFilter::Bloom(super::bloom_build(
                keys.iter().copied(),
                keys.len(),
                params.bloom_target_fpr,
                crate::hashing::derive_seed(params.seed ^ 0xb10f, iteration as u64),
            )),
            Approximation::Exact => OversizeFilter::Exact(keys.iter().copied().collect()),
        }
    }

    pub fn contains(&self, key: KeyHash) -> bool {
        match self {
            OversizeFilter::Bloom(b) => b.contains(key),
            OversizeFilter::Exact(s) => s.contains(&key),
        }
    }
}
