//! Baselines and pair-set metrics.

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KeyedRecord, RecordId};
use crate::pairs::materialize_blocks;

/// Unordered record pair, stored with `a < b`.
pub type Pair = (RecordId, RecordId);

pub fn canonical_pair(x: RecordId, y: RecordId) -> Option<Pair> {
    match x.cmp(&y) {
        std::cmp::Ordering::Less => Some((x, y)),
        std::cmp::Ordering::Greater => Some((y, x)),
        std::cmp::Ordering::Equal => None,
    }
}

/// Sorted, duplicate-free set of canonical pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet(Vec<Pair>);

impl PairSet {
    /// Canonicalizes, drops self-pairs, sorts and deduplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (RecordId, RecordId)>) -> Self {
        let mut v: Vec<Pair> = pairs.into_iter().filter_map(|(a, b)| canonical_pair(a, b)).collect();
        v.par_sort_unstable();
        v.dedup();
        PairSet(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: &Pair) -> bool {
        self.0.binary_search(p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pair> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Pair] {
        &self.0
    }

    pub fn intersection_len(&self, other: &PairSet) -> usize {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.0.par_iter().filter(|p| large.contains(p)).count()
    }

    pub fn is_subset(&self, other: &PairSet) -> bool {
        self.intersection_len(other) == self.len()
    }
}

/// Positive labels `L+`. `complete` marks full ground truth, the only case
/// in which pair quality is defined here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub positives: PairSet,
    pub complete: bool,
}

impl LabelSet {
    pub fn new(positives: impl IntoIterator<Item = (RecordId, RecordId)>, complete: bool) -> Self {
        Self { positives: PairSet::from_pairs(positives), complete }
    }
}

/// `|P ∩ L+| / |L+|`.
pub fn pair_completeness(pairs: &PairSet, labels: &LabelSet) -> Result<f64> {
    if labels.positives.is_empty() {
        return Err(Error::UndefinedMetric("pair completeness needs at least one positive label".into()));
    }
    Ok(pairs.intersection_len(&labels.positives) as f64 / labels.positives.len() as f64)
}

/// `|P ∩ L+| / |P|`, only against complete ground truth.
pub fn pair_quality(pairs: &PairSet, labels: &LabelSet) -> Result<f64> {
    if !labels.complete {
        return Err(Error::UndefinedMetric(
            "pair quality needs complete ground truth; with incomplete labels every unlabeled pair \
             would count as a false positive"
                .into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::UndefinedMetric("pair quality of an empty pair set".into()));
    }
    Ok(pairs.intersection_len(&labels.positives) as f64 / pairs.len() as f64)
}

/// Threshold blocking: keeps only top-level blocks with at most
/// `max_block_size` records and emits their distinct pairs.
pub fn threshold_blocking(index: &[KeyedRecord], max_block_size: u32) -> PairSet {
    let blocks = materialize_blocks(index);
    let pairs: Vec<Pair> = blocks
        .par_iter()
        .filter(|b| b.members.len() >= 2 && b.members.len() <= max_block_size as usize)
        .flat_map_iter(|b| {
            let m = &b.members;
            (0..m.len()).flat_map(move |i| (i + 1..m.len()).map(move |j| (m[i], m[j])))
        })
        .collect();
    PairSet::from_pairs(pairs)
}

/// Distinct unordered pairs sharing at least one top-level key, with no
/// block discarded. Counts per record without materializing the pair set.
pub fn naive_pair_count(index: &[KeyedRecord]) -> u64 {
    let blocks = materialize_blocks(index);
    let mut dense: FxHashMap<RecordId, u32> = FxHashMap::default();
    for r in index {
        let next = dense.len() as u32;
        dense.entry(r.rid).or_insert(next);
    }
    let members: Vec<Vec<u32>> =
        blocks.iter().map(|b| b.members.iter().map(|rid| dense[rid]).collect()).collect();
    let mut record_blocks: Vec<Vec<u32>> = vec![Vec::new(); dense.len()];
    for (bi, m) in members.iter().enumerate() {
        if m.len() >= 2 {
            for &r in m {
                record_blocks[r as usize].push(bi as u32);
            }
        }
    }
    let n = dense.len();
    // For each record, count distinct neighbours with a larger dense id.
    (0..n)
        .into_par_iter()
        .fold(
            || (vec![u32::MAX; n], 0u64),
            |(mut stamp, mut count), r| {
                for &b in &record_blocks[r] {
                    for &o in &members[b as usize] {
                        if (o as usize) > r && stamp[o as usize] != r as u32 {
                            stamp[o as usize] = r as u32;
                            count += 1;
                        }
                    }
                }
                (stamp, count)
            },
        )
        .map(|(_, c)| c)
        .sum()
}

/// Ground truth from an entity id: every two records sharing the entity id
/// are a positive pair, optionally only when they differ on at least one of
/// the given attribute values (snapshots of a registry where unchanged rows
/// are not interesting duplicates).
pub fn labels_from_entity_ids<K: std::hash::Hash + Eq>(
    records: impl IntoIterator<Item = (RecordId, K, Vec<String>)>,
    require_difference: bool,
) -> LabelSet {
    let mut groups: FxHashMap<K, Vec<(RecordId, Vec<String>)>> = FxHashMap::default();
    for (rid, entity, attrs) in records {
        groups.entry(entity).or_default().push((rid, attrs));
    }
    let mut pairs = Vec::new();
    for members in groups.values() {
        for (i, (a, attrs_a)) in members.iter().enumerate() {
            for (b, attrs_b) in &members[i + 1..] {
                if !require_difference || attrs_a != attrs_b {
                    pairs.push((*a, *b));
                }
            }
        }
    }
    LabelSet::new(pairs, true)
}

/// Summary of a pair set against labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub pairs: usize,
    pub positives: usize,
    pub true_positives: usize,
    pub pair_completeness: f64,
    /// `None` when labels are incomplete.
    pub pair_quality: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_quality_note: Option<String>,
}

pub fn evaluate(pairs: &PairSet, labels: &LabelSet) -> Result<Metrics> {
    let pc = pair_completeness(pairs, labels)?;
    let (pq, note) = match pair_quality(pairs, labels) {
        Ok(q) => (Some(q), None),
        Err(Error::UndefinedMetric(msg)) if !labels.complete => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    Ok(Metrics {
        pairs: pairs.len(),
        positives: labels.positives.len(),
        true_positives: pairs.intersection_len(&labels.positives),
        pair_completeness: pc,
        pair_quality: pq,
        pair_quality_note: note,
    })
}
