//! Brute-force reference: materializes every block as an explicit record
//! set and intersects blocks pairwise. Shares no code with the engine apart
//! from the key hash functions.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use hdb_core::{combine_keys, EngineParams, KeyHash, KeyedRecord, RecordId};

#[derive(Debug, Clone)]
struct RefBlock {
    key: KeyHash,
    members: Vec<RecordId>,
    parent_size: Option<usize>,
}

#[derive(Debug, Default)]
pub struct Reference {
    /// Emitted right-sized blocks (size ≥ 2), key → ascending members.
    pub blocks: BTreeMap<KeyHash, Vec<RecordId>>,
    /// Every pair with the block it is attributed to.
    pub pairs: BTreeMap<(RecordId, RecordId), KeyHash>,
    pub levels: usize,
    pub abandoned: usize,
}

fn intersect(a: &[RecordId], b: &[RecordId]) -> Vec<RecordId> {
    let bs: BTreeSet<_> = b.iter().collect();
    a.iter().filter(|r| bs.contains(r)).copied().collect()
}

pub fn reference(index: &[KeyedRecord], params: &EngineParams) -> Reference {
    let m = params.max_block_size as usize;
    let mut top: BTreeMap<KeyHash, BTreeSet<RecordId>> = BTreeMap::new();
    for r in index {
        for k in &r.keys {
            top.entry(k.key).or_default().insert(r.rid);
        }
    }
    let mut level: Vec<RefBlock> = top
        .into_iter()
        .map(|(key, s)| RefBlock { key, members: s.into_iter().collect(), parent_size: None })
        .collect();

    let mut out = Reference::default();
    let mut iteration = 0;
    loop {
        // Classify.
        let mut over: Vec<RefBlock> = Vec::new();
        for b in level {
            let size = b.members.len();
            if size <= m {
                if size >= 2 {
                    out.blocks.insert(b.key, b.members);
                }
            } else if b.parent_size.is_none_or(|p| size as f64 / p as f64 <= params.max_similarity) {
                over.push(b);
            }
        }
        // Identical record sets: keep the smallest key.
        over.sort_by_key(|b| b.key);
        let mut seen: HashMap<Vec<RecordId>, ()> = HashMap::new();
        over.retain(|b| seen.insert(b.members.clone(), ()).is_none());
        out.levels = iteration + 1;

        if over.is_empty() {
            break;
        }
        if iteration == params.max_iterations {
            out.abandoned = over.len();
            break;
        }
        iteration += 1;

        let mut per_record: HashMap<RecordId, usize> = HashMap::new();
        for b in &over {
            for r in &b.members {
                *per_record.entry(*r).or_default() += 1;
            }
        }
        let mut next = Vec::new();
        for i in 0..over.len() {
            for j in i + 1..over.len() {
                let (a, b) = (&over[i], &over[j]);
                let members: Vec<RecordId> = intersect(&a.members, &b.members)
                    .into_iter()
                    .filter(|r| per_record[r] <= params.max_keys)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let key = combine_keys(a.key.min(b.key), a.key.max(b.key));
                let parent_size = a.members.len().min(b.members.len());
                next.push(RefBlock { key, members, parent_size: Some(parent_size) });
            }
        }
        level = next;
    }

    for (key, members) in &out.blocks {
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let p = (members[i], members[j]);
                match out.pairs.get(&p) {
                    Some(prev) => {
                        let prev_len = out.blocks[prev].len();
                        if members.len() > prev_len || (members.len() == prev_len && key < prev) {
                            out.pairs.insert(p, *key);
                        }
                    }
                    None => {
                        out.pairs.insert(p, *key);
                    }
                }
            }
        }
    }
    out
}

/// Key → members of an engine result.
pub fn engine_blocks(right_sized: &[KeyedRecord]) -> BTreeMap<KeyHash, Vec<RecordId>> {
    let mut blocks: BTreeMap<KeyHash, Vec<RecordId>> = BTreeMap::new();
    for r in right_sized {
        for k in &r.keys {
            blocks.entry(k.key).or_default().push(r.rid);
        }
    }
    for v in blocks.values_mut() {
        v.sort();
    }
    blocks
}

/// Number of emitted blocks whose materialized size exceeds the limit.
pub fn size_violations(right_sized: &[KeyedRecord], max_block_size: u32) -> usize {
    engine_blocks(right_sized).values().filter(|m| m.len() > max_block_size as usize).count()
}

pub struct OracleCase {
    pub index: Vec<KeyedRecord>,
    pub params: EngineParams,
    pub partitions: usize,
}

/// A random index of 10^2..10^4 records with random engine thresholds.
pub fn oracle_case(seed: u64) -> OracleCase {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let records = 10f64.powf(rng.gen_range(2.0..=4.0)).round() as usize;
    let mut spec = hdb_core::synth::IndexSpec::random(&mut rng, records);
    spec.records = records;
    let params = EngineParams {
        max_block_size: rng.gen_range(3..=40),
        max_keys: rng.gen_range(2..=8),
        max_similarity: [0.5, 0.8, 0.9, 1.0][rng.gen_range(0..4)],
        max_iterations: [1, 2, 3, 20, 20, 20][rng.gen_range(0..6)],
        approximation: hdb_core::Approximation::Exact,
        ..EngineParams::default()
    };
    OracleCase { index: hdb_core::synth::random_index(&spec), params, partitions: [1, 3, 8][rng.gen_range(0..3)] }
}
