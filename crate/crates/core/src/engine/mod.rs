//! The hashed dynamic blocking iteration.
//!
//! Every phase is a map over contiguous record partitions followed by a
//! commutative reduce (sketch merge, per-key count and XOR fold), so the
//! result does not depend on the number of partitions or on scheduling.
//!
//! ```text
//! index ─► rough ─┬─► right-sized ───────────────────────────────┐
//!                 └─► possibly over-sized ─► exact ─┬─► corrected ┤
//!                                                   └─► over-sized ─► intersect ─► rough ...
//! ```

mod exact;
mod intersect;
mod rough;

use std::time::Instant;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

pub use exact::{exactly_count_and_dedupe, ExactSplit};
pub use intersect::{intersect_keys, IntersectOutput};
pub use rough::{rough_oversize_detection, RoughSplit};

use crate::error::Result;
use crate::model::{AnnotatedKey, EngineParams, KeyHash, KeyedRecord, RecordId};

/// Per-iteration counters. Iteration 0 is the top-level classification;
/// iteration `i > 0` starts with the `i`-th round of key intersection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    /// Records entering the iteration (over-sized records for `i > 0`).
    pub input_records: usize,
    /// Records discarded from intersection for having more than `max_keys` keys.
    pub dropped_max_keys_records: usize,
    /// Key occurrences handed to rough detection.
    pub candidate_key_occurrences: usize,
    pub rough_right_occurrences: usize,
    pub possibly_oversized_occurrences: usize,
    /// Occurrences discarded because the key barely shrank its parent.
    pub similarity_discarded_occurrences: usize,
    /// Distinct keys that turned out right-sized on exact counting.
    pub corrected_keys: usize,
    /// Right-sized keys misrouted to the duplicate branch by a Bloom false positive.
    pub bloom_false_positive_keys: usize,
    /// Distinct truly over-sized keys before deduplication.
    pub oversized_keys: usize,
    pub duplicate_keys: usize,
    pub surviving_keys: usize,
    /// Wall-clock time, left out of serialized reports.
    #[serde(skip)]
    pub elapsed_ms: u64,
}

/// Result of a full engine run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineOutput {
    /// Right-sized blocks as record → keys rows, sorted by record id, with
    /// each key annotated with its exact block size in `2..=max_block_size`.
    pub right_sized: Vec<KeyedRecord>,
    pub iterations: Vec<IterationStats>,
    /// True when over-sized keys were still left after `max_iterations`.
    pub hit_iteration_cap: bool,
    /// Over-sized keys abandoned at the iteration cap.
    pub abandoned_oversized_keys: usize,
}

impl EngineOutput {
    /// Number of distinct right-sized blocks.
    pub fn block_count(&self) -> usize {
        let mut keys: Vec<KeyHash> = self.right_sized.iter().flat_map(|r| r.key_hashes()).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    }
}

/// Splits `len` items into at most `partitions` contiguous chunks.
pub(crate) fn chunk_len(len: usize, partitions: usize) -> usize {
    len.div_ceil(partitions.max(1)).max(1)
}

/// The blocking engine with a fixed partition count.
#[derive(Debug, Clone)]
pub struct Engine {
    params: EngineParams,
    partitions: usize,
}

impl Engine {
    pub fn new(params: EngineParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, partitions: rayon::current_num_threads().max(1) })
    }

    /// Number of record partitions each phase is split into. Results do not
    /// depend on it.
    pub fn with_partitions(mut self, partitions: usize) -> Self {
        self.partitions = partitions.max(1);
        self
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    pub fn partitions(&self) -> usize {
        self.partitions
    }

    pub fn run(&self, index: &[KeyedRecord]) -> Result<EngineOutput> {
        let params = &self.params;
        let p = self.partitions;
        let mut right_parts: Vec<Vec<KeyedRecord>> = Vec::new();
        let mut iterations = Vec::new();

        let started = Instant::now();
        let top: Vec<KeyedRecord> = index
            .iter()
            .filter(|r| !r.keys.is_empty())
            .map(|r| KeyedRecord {
                rid: r.rid,
                keys: r.keys.iter().map(|k| AnnotatedKey::top_level(k.key)).collect(),
            })
            .collect();
        let mut stats = IterationStats {
            iteration: 0,
            input_records: index.len(),
            ..Default::default()
        };
        let mut oversized = self.classify(top, 0, &mut stats, &mut right_parts)?;
        stats.elapsed_ms = started.elapsed().as_millis() as u64;
        log_iteration(&stats);
        iterations.push(stats);

        let mut iteration = 0;
        while !oversized.is_empty() && iteration < params.max_iterations {
            iteration += 1;
            let started = Instant::now();
            let mut stats = IterationStats { iteration, input_records: oversized.len(), ..Default::default() };
            let intersected = intersect_keys(&oversized, params, p);
            stats.dropped_max_keys_records = intersected.dropped_records;
            oversized = self.classify(intersected.records, iteration, &mut stats, &mut right_parts)?;
            stats.elapsed_ms = started.elapsed().as_millis() as u64;
            log_iteration(&stats);
            iterations.push(stats);
        }

        let abandoned = if oversized.is_empty() {
            0
        } else {
            let mut keys: Vec<KeyHash> = oversized.iter().flat_map(|r| r.key_hashes()).collect();
            keys.sort_unstable();
            keys.dedup();
            tracing::warn!(
                max_iterations = params.max_iterations,
                abandoned_keys = keys.len(),
                "iteration cap reached; dropping remaining over-sized keys"
            );
            keys.len()
        };

        Ok(EngineOutput {
            right_sized: finalize_right_sized(right_parts, p),
            iterations,
            hit_iteration_cap: abandoned > 0,
            abandoned_oversized_keys: abandoned,
        })
    }

    /// Rough detection followed by exact counting and dedupe; pushes the
    /// right-sized rows and returns the surviving over-sized rows.
    fn classify(
        &self,
        candidates: Vec<KeyedRecord>,
        iteration: usize,
        stats: &mut IterationStats,
        right_parts: &mut Vec<Vec<KeyedRecord>>,
    ) -> Result<Vec<KeyedRecord>> {
        stats.candidate_key_occurrences = candidates.iter().map(|r| r.keys.len()).sum();
        let rough = rough_oversize_detection(&candidates, &self.params, self.partitions, iteration)?;
        drop(candidates);
        stats.rough_right_occurrences = rough.right.iter().map(|r| r.keys.len()).sum();
        stats.possibly_oversized_occurrences = rough.possibly_oversized.iter().map(|r| r.keys.len()).sum();
        stats.similarity_discarded_occurrences = rough.similarity_discarded;
        right_parts.push(rough.right);

        let exact = exactly_count_and_dedupe(&rough.possibly_oversized, &self.params, self.partitions, iteration);
        stats.corrected_keys = exact.corrected_keys;
        stats.bloom_false_positive_keys = exact.bloom_false_positive_keys;
        stats.oversized_keys = exact.oversized_keys;
        stats.duplicate_keys = exact.duplicate_keys;
        stats.surviving_keys = exact.surviving_keys;
        right_parts.push(exact.corrected_right);
        Ok(exact.oversized)
    }
}

fn log_iteration(s: &IterationStats) {
    tracing::info!(
        iteration = s.iteration,
        input_records = s.input_records,
        dropped_max_keys_records = s.dropped_max_keys_records,
        candidate_keys = s.candidate_key_occurrences,
        right = s.rough_right_occurrences,
        possibly_oversized = s.possibly_oversized_occurrences,
        similarity_discarded = s.similarity_discarded_occurrences,
        corrected = s.corrected_keys,
        oversized = s.oversized_keys,
        duplicates = s.duplicate_keys,
        surviving = s.surviving_keys,
        elapsed_ms = s.elapsed_ms,
        "hdb iteration"
    );
}

/// Counts every right-sized key exactly once, drops single-record blocks
/// and regroups the rows by record id.
fn finalize_right_sized(parts: Vec<Vec<KeyedRecord>>, partitions: usize) -> Vec<KeyedRecord> {
    let mut flat: Vec<(RecordId, KeyHash)> =
        parts.into_iter().flatten().flat_map(|r| r.keys.into_iter().map(move |k| (r.rid, k.key))).collect();
    flat.par_sort_unstable();
    flat.dedup();

    let chunk = chunk_len(flat.len(), partitions);
    let sizes: FxHashMap<KeyHash, u32> = flat
        .par_chunks(chunk)
        .map(|part| {
            let mut m: FxHashMap<KeyHash, u32> = FxHashMap::default();
            for (_, k) in part {
                *m.entry(*k).or_default() += 1;
            }
            m
        })
        .reduce(FxHashMap::default, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_default() += c;
            }
            a
        });

    let mut out: Vec<KeyedRecord> = Vec::new();
    for (rid, key) in flat {
        let size = sizes[&key];
        if size < 2 {
            continue;
        }
        let annotated = AnnotatedKey { key, size, psize: AnnotatedKey::NO_PARENT };
        match out.last_mut() {
            Some(last) if last.rid == rid => last.keys.push(annotated),
            _ => out.push(KeyedRecord { rid, keys: vec![annotated] }),
        }
    }
    out
}

/// Runs the engine with one partition per worker thread.
pub fn hashed_dynamic_blocking(index: &[KeyedRecord], params: &EngineParams) -> Result<EngineOutput> {
    Engine::new(params.clone())?.run(index)
}
