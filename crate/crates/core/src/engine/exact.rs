use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::chunk_len;
use crate::model::{AnnotatedKey, EngineParams, KeyHash, KeyedRecord};
use crate::sketch::{MembershipHash, OversizeFilter};

/// Output of [`exactly_count_and_dedupe`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSplit {
    /// Keys the size counter overcounted; exact size ≤ `max_block_size`.
    pub corrected_right: Vec<KeyedRecord>,
    /// Deduplicated, truly over-sized keys with exact sizes in `size`.
    pub oversized: Vec<KeyedRecord>,
    pub corrected_keys: usize,
    pub bloom_false_positive_keys: usize,
    pub oversized_keys: usize,
    pub duplicate_keys: usize,
    pub surviving_keys: usize,
}

/// Per-key exact size and XOR of member record digests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct KeyTally {
    count: u32,
    members: MembershipHash,
}

fn tally(records: &[KeyedRecord], partitions: usize) -> FxHashMap<KeyHash, KeyTally> {
    let chunk = chunk_len(records.len(), partitions);
    records
        .par_chunks(chunk)
        .map(|part| {
            let mut m: FxHashMap<KeyHash, KeyTally> = FxHashMap::default();
            for r in part {
                for k in &r.keys {
                    let t = m.entry(k.key).or_default();
                    t.count += 1;
                    t.members = t.members.with(r.rid);
                }
            }
            m
        })
        .reduce(FxHashMap::default, |a, b| if a.len() < b.len() { merge_into(b, a) } else { merge_into(a, b) })
}

fn merge_into(mut into: FxHashMap<KeyHash, KeyTally>, from: FxHashMap<KeyHash, KeyTally>) -> FxHashMap<KeyHash, KeyTally> {
    for (k, t) in from {
        let e = into.entry(k).or_default();
        e.count += t.count;
        e.members = e.members ^ t.members;
    }
    into
}

/// Exactly counts the possibly over-sized keys, routes overcounted keys back
/// to right-sized, and keeps one key (the smallest hash) per group of
/// over-sized keys covering the same record set.
///
/// Routing per key occurrence: not in the over-size filter → corrected
/// right-sized; in the survivor counts → over-sized with exact size;
/// otherwise a duplicate, dropped. With a Bloom filter, a right-sized key
/// lands in the duplicate branch with probability at most the target FPR.
pub fn exactly_count_and_dedupe(
    possibly_oversized: &[KeyedRecord],
    params: &EngineParams,
    partitions: usize,
    iteration: usize,
) -> ExactSplit {
    let tallies = tally(possibly_oversized, partitions);

    let mut oversized: Vec<(KeyHash, KeyTally)> =
        tallies.iter().filter(|(_, t)| t.count > params.max_block_size).map(|(k, t)| (*k, *t)).collect();
    oversized.sort_unstable_by_key(|(k, _)| *k);
    let corrected_candidates: Vec<KeyHash> =
        tallies.iter().filter(|(_, t)| t.count <= params.max_block_size).map(|(k, _)| *k).collect();

    // Ascending key order: the first key seen per membership group survives.
    let mut survivors_by_members: FxHashMap<(MembershipHash, u32), KeyHash> = FxHashMap::default();
    for (k, t) in &oversized {
        survivors_by_members.entry((t.members, t.count)).or_insert(*k);
    }
    let counts: FxHashMap<KeyHash, u32> =
        survivors_by_members.into_iter().map(|((_, count), k)| (k, count)).collect();

    let oversized_keys: Vec<KeyHash> = oversized.iter().map(|(k, _)| *k).collect();
    let filter = OversizeFilter::build(&oversized_keys, params, iteration);
    let bloom_false_positive_keys = corrected_candidates.iter().filter(|k| filter.contains(**k)).count();

    let chunk = chunk_len(possibly_oversized.len(), partitions);
    let parts: Vec<(Vec<KeyedRecord>, Vec<KeyedRecord>)> = possibly_oversized
        .par_chunks(chunk)
        .map(|part| {
            let mut right_rows = Vec::new();
            let mut over_rows = Vec::new();
            for r in part {
                let mut right = Vec::new();
                let mut over = Vec::new();
                for k in &r.keys {
                    if !filter.contains(k.key) {
                        right.push(*k);
                    } else if let Some(&size) = counts.get(&k.key) {
                        over.push(AnnotatedKey { key: k.key, size, psize: k.psize });
                    }
                }
                if !right.is_empty() {
                    right_rows.push(KeyedRecord { rid: r.rid, keys: right });
                }
                if !over.is_empty() {
                    over_rows.push(KeyedRecord { rid: r.rid, keys: over });
                }
            }
            (right_rows, over_rows)
        })
        .collect();

    let mut split = ExactSplit {
        corrected_keys: corrected_candidates.len() - bloom_false_positive_keys,
        bloom_false_positive_keys,
        oversized_keys: oversized_keys.len(),
        duplicate_keys: oversized_keys.len() - counts.len(),
        surviving_keys: counts.len(),
        ..Default::default()
    };
    for (right, over) in parts {
        split.corrected_right.extend(right);
        split.oversized.extend(over);
    }
    split
}
