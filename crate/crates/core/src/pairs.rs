//! Materializes right-sized blocks into a globally deduplicated candidate
//! pair set. Each pair is attributed to the largest block that produced it
//! (ties: smallest key hash). Blocks that lost some of their pairs to larger
//! blocks carry a bitmap over their `n choose 2` pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{KeyHash, KeyedRecord, RecordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidatePair {
    pub rid1: RecordId,
    pub rid2: RecordId,
    pub block: KeyHash,
}

/// A materialized block: key and members in ascending record id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub key: KeyHash,
    pub members: Vec<RecordId>,
}

/// Retained pairs of one block. `bitmap == None` means all pairs are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPairSet {
    pub block: KeyHash,
    pub members: Vec<RecordId>,
    pub bitmap: Option<PairBitmap>,
}

impl BlockPairSet {
    pub fn retained_pairs(&self) -> usize {
        match &self.bitmap {
            Some(b) => b.count_ones(),
            None => choose2(self.members.len()),
        }
    }

    /// Retained pairs in `(i, j)` upper-triangular order.
    pub fn pairs(&self) -> impl Iterator<Item = (RecordId, RecordId)> + '_ {
        let n = self.members.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j))).filter_map(move |(i, j)| {
            let keep = self.bitmap.as_ref().is_none_or(|b| b.get(pair_bit_index(i, j, n)));
            keep.then(|| (self.members[i], self.members[j]))
        })
    }
}

/// Fixed-length bit array, least significant bit first within each byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBitmap {
    len: usize,
    bytes: Vec<u8>,
}

impl PairBitmap {
    pub fn new(len: usize) -> Self {
        Self { len, bytes: vec![0; len.div_ceil(8)] }
    }

    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Option<Self> {
        (bytes.len() == len.div_ceil(8)).then_some(Self { len, bytes })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.bytes[i / 8] |= 1 << (i % 8);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.bytes[i / 8] & (1 << (i % 8)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

pub fn choose2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of pair `(i, j)`, `i < j < n`, in the row-major enumeration of
/// the strictly upper triangular `n × n` matrix:
/// `i (n - 1) - i (i - 1) / 2 + j - i - 1`.
pub fn pair_bit_index(i: usize, j: usize, n: usize) -> usize {
    assert!(i < j && j < n, "pair_bit_index requires i < j < n, got ({i}, {j}, {n})");
    i * (n - 1) - i * i.saturating_sub(1) / 2 + j - i - 1
}

/// Of several blocks producing the same pair, the one with the most members;
/// ties go to the smallest key hash.
pub fn tie_break_largest(candidates: &[(u32, KeyHash)]) -> KeyHash {
    assert!(!candidates.is_empty(), "tie_break_largest needs at least one block");
    candidates.iter().copied().min_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1))).map(|(_, k)| k).unwrap()
}

/// Groups record → key rows into blocks sorted by key, members ascending.
pub fn materialize_blocks(rows: &[KeyedRecord]) -> Vec<Block> {
    let mut flat: Vec<(KeyHash, RecordId)> =
        rows.iter().flat_map(|r| r.keys.iter().map(move |k| (k.key, r.rid))).collect();
    flat.par_sort_unstable();
    flat.dedup();
    let mut blocks: Vec<Block> = Vec::new();
    for (key, rid) in flat {
        match blocks.last_mut() {
            Some(b) if b.key == key => b.members.push(rid),
            _ => blocks.push(Block { key, members: vec![rid] }),
        }
    }
    blocks
}

/// Deduplicated pairs plus their per-block encoding.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairOutput {
    /// Sorted by `(rid1, rid2)`, each unordered pair exactly once.
    pub pairs: Vec<CandidatePair>,
    /// Blocks that retained at least one pair, sorted by key.
    pub block_pairs: Vec<BlockPairSet>,
}

/// Sort key that puts the winning block of a pair first. Blocks are
/// indexed in ascending key order, so a smaller index is a smaller key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct PairClaim {
    rid1: RecordId,
    rid2: RecordId,
    neg_size: std::cmp::Reverse<u32>,
    block: u32,
}

/// Generates all pairs of all right-sized blocks, keeps each pair once
/// (from its largest block) and re-encodes the kept pairs per block.
pub fn remove_dupe_pairs(right_sized: &[KeyedRecord]) -> PairOutput {
    let blocks: Vec<Block> = materialize_blocks(right_sized).into_iter().filter(|b| b.members.len() >= 2).collect();

    let mut claims: Vec<PairClaim> = blocks
        .par_iter()
        .enumerate()
        .flat_map_iter(|(bi, b)| {
            let size = std::cmp::Reverse(b.members.len() as u32);
            let m = &b.members;
            (0..m.len()).flat_map(move |i| {
                (i + 1..m.len()).map(move |j| PairClaim { rid1: m[i], rid2: m[j], neg_size: size, block: bi as u32 })
            })
        })
        .collect();
    claims.par_sort_unstable();
    claims.dedup_by(|later, first| later.rid1 == first.rid1 && later.rid2 == first.rid2);

    let pairs: Vec<CandidatePair> = claims
        .par_iter()
        .map(|c| CandidatePair { rid1: c.rid1, rid2: c.rid2, block: blocks[c.block as usize].key })
        .collect();
    claims.par_sort_unstable_by_key(|c| (c.block, c.rid1, c.rid2));

    let block_pairs = encode_block_pairs(&blocks, &claims);
    PairOutput { pairs, block_pairs }
}

fn encode_block_pairs(blocks: &[Block], by_block: &[PairClaim]) -> Vec<BlockPairSet> {
    let mut out = Vec::new();
    let mut rest = by_block;
    for (bi, b) in blocks.iter().enumerate() {
        let take = rest.iter().take_while(|c| c.block as usize == bi).count();
        let (mine, tail) = rest.split_at(take);
        rest = tail;
        if mine.is_empty() {
            continue;
        }
        let n = b.members.len();
        let bitmap = (mine.len() < choose2(n)).then(|| {
            let mut bm = PairBitmap::new(choose2(n));
            for c in mine {
                let i = b.members.binary_search(&c.rid1).expect("pair member missing from block");
                let j = b.members.binary_search(&c.rid2).expect("pair member missing from block");
                bm.set(pair_bit_index(i, j, n));
            }
            bm
        });
        out.push(BlockPairSet { block: b.key, members: b.members.clone(), bitmap });
    }
    out
}
