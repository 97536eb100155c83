use rayon::prelude::*;

use super::chunk_len;
use crate::error::Result;
use crate::model::{EngineParams, KeyedRecord};
use crate::sketch::SizeCounter;

/// Output of [`rough_oversize_detection`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoughSplit {
    /// Keys whose estimated size is at most `max_block_size`.
    pub right: Vec<KeyedRecord>,
    /// Keys estimated over-sized that still shrink their parent enough.
    pub possibly_oversized: Vec<KeyedRecord>,
    /// Key occurrences dropped by the similarity test.
    pub similarity_discarded: usize,
}

/// Whether a key estimated at `estimate` records shrinks its smallest parent
/// (`psize`) by enough to be worth intersecting further. Top-level keys have
/// no parent and always pass.
#[inline]
pub(crate) fn shrinks_parent(estimate: u32, psize: u32, max_similarity: f64) -> bool {
    psize == crate::model::AnnotatedKey::NO_PARENT || (estimate as f64 / psize as f64) <= max_similarity
}

/// Builds one size counter per partition, merges them, and classifies every
/// key occurrence as right-sized, possibly over-sized, or discarded.
///
/// The sketch never undercounts, so a truly over-sized key is never
/// classified right-sized.
pub fn rough_oversize_detection(
    candidates: &[KeyedRecord],
    params: &EngineParams,
    partitions: usize,
    iteration: usize,
) -> Result<RoughSplit> {
    let chunk = chunk_len(candidates.len(), partitions);
    let counter = candidates
        .par_chunks(chunk)
        .map(|part| {
            let mut c = SizeCounter::for_params(params, iteration);
            for r in part {
                for k in &r.keys {
                    c.increment(k.key);
                }
            }
            Ok(c)
        })
        .try_reduce_with(|a, b| a.merge(b))
        .transpose()?
        .unwrap_or_else(|| SizeCounter::for_params(params, iteration));

    let parts: Vec<RoughSplit> = candidates
        .par_chunks(chunk)
        .map(|part| {
            let mut out = RoughSplit::default();
            for r in part {
                let mut right = Vec::new();
                let mut over = Vec::new();
                for k in &r.keys {
                    let estimate = counter.estimate(k.key);
                    if estimate <= params.max_block_size {
                        right.push(*k);
                    } else if shrinks_parent(estimate, k.psize, params.max_similarity) {
                        over.push(*k);
                    } else {
                        out.similarity_discarded += 1;
                    }
                }
                if !right.is_empty() {
                    out.right.push(KeyedRecord { rid: r.rid, keys: right });
                }
                if !over.is_empty() {
                    out.possibly_oversized.push(KeyedRecord { rid: r.rid, keys: over });
                }
            }
            out
        })
        .collect();

    let mut split = RoughSplit::default();
    for p in parts {
        split.right.extend(p.right);
        split.possibly_oversized.extend(p.possibly_oversized);
        split.similarity_discarded += p.similarity_discarded;
    }
    Ok(split)
}
