//! End-to-end blocking of a dataset and the reports written next to the
//! pair files.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::building::{build_index, BlockingConfig};
use crate::dataset::Dataset;
use crate::engine::{Engine, EngineOutput, IterationStats};
use crate::error::Result;
use crate::model::{EngineParams, KeyedRecord};
use crate::pairs::{remove_dupe_pairs, PairOutput};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct BlockingRun {
    pub index: Vec<KeyedRecord>,
    pub engine: EngineOutput,
    pub pairs: PairOutput,
    pub timing: Timing,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub index_ms: u64,
    pub engine_ms: u64,
    pub pairs_ms: u64,
    pub iteration_ms: Vec<u64>,
}

impl Timing {
    pub fn total(&self) -> Duration {
        Duration::from_millis(self.index_ms + self.engine_ms + self.pairs_ms)
    }
}

fn ms(since: Instant) -> u64 {
    since.elapsed().as_millis() as u64
}

/// Builds the index, runs the engine on `partitions` partitions and
/// deduplicates the pairs.
pub fn run_blocking(
    dataset: &Dataset,
    config: &BlockingConfig,
    params: &EngineParams,
    partitions: usize,
) -> Result<BlockingRun> {
    let engine = Engine::new(params.clone())?.with_partitions(partitions);
    let t = Instant::now();
    let index = build_index(dataset, config)?;
    let index_ms = ms(t);
    let t = Instant::now();
    let out = engine.run(&index)?;
    let engine_ms = ms(t);
    let t = Instant::now();
    let pairs = remove_dupe_pairs(&out.right_sized);
    let pairs_ms = ms(t);
    let timing = Timing {
        index_ms,
        engine_ms,
        pairs_ms,
        iteration_ms: out.iterations.iter().map(|s| s.elapsed_ms).collect(),
    };
    Ok(BlockingRun { index, engine: out, pairs, timing })
}

/// Deterministic summary of a run: same input, config and seed give the
/// same document regardless of thread or partition count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub version: u32,
    pub records: usize,
    pub records_without_keys: usize,
    pub top_level_key_occurrences: usize,
    pub params: EngineParams,
    pub iterations: Vec<IterationStats>,
    pub hit_iteration_cap: bool,
    pub abandoned_oversized_keys: usize,
    pub right_sized_blocks: usize,
    pub pair_blocks: usize,
    pub bitmap_blocks: usize,
    pub pairs: usize,
}

impl StatsReport {
    pub fn new(run: &BlockingRun, params: &EngineParams) -> Self {
        Self {
            version: REPORT_VERSION,
            records: run.index.len(),
            records_without_keys: run.index.iter().filter(|r| r.keys.is_empty()).count(),
            top_level_key_occurrences: run.index.iter().map(|r| r.keys.len()).sum(),
            params: params.clone(),
            iterations: run.engine.iterations.clone(),
            hit_iteration_cap: run.engine.hit_iteration_cap,
            abandoned_oversized_keys: run.engine.abandoned_oversized_keys,
            right_sized_blocks: run.engine.block_count(),
            pair_blocks: run.pairs.block_pairs.len(),
            bitmap_blocks: run.pairs.block_pairs.iter().filter(|b| b.bitmap.is_some()).count(),
            pairs: run.pairs.pairs.len(),
        }
    }
}
