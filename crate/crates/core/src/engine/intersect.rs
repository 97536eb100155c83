use rayon::prelude::*;

use super::chunk_len;
use crate::model::{combine_keys, AnnotatedKey, EngineParams, KeyedRecord};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntersectOutput {
    pub records: Vec<KeyedRecord>,
    /// Records skipped for carrying more than `max_keys` over-sized keys.
    pub dropped_records: usize,
}

/// Replaces each record's over-sized keys with the keys of all pairwise
/// intersections, annotated with the smaller parent's exact size.
///
/// Records with more than `max_keys` keys are dropped; records with a
/// single key produce nothing.
pub fn intersect_keys(oversized: &[KeyedRecord], params: &EngineParams, partitions: usize) -> IntersectOutput {
    let chunk = chunk_len(oversized.len(), partitions);
    let parts: Vec<IntersectOutput> = oversized
        .par_chunks(chunk)
        .map(|part| {
            let mut out = IntersectOutput::default();
            for r in part {
                let n = r.keys.len();
                if n > params.max_keys {
                    out.dropped_records += 1;
                    continue;
                }
                if n < 2 {
                    continue;
                }
                let mut keys = Vec::with_capacity(n * (n - 1) / 2);
                for (i, a) in r.keys.iter().enumerate() {
                    for b in &r.keys[i + 1..] {
                        let (lo, hi) = if a.key < b.key { (a.key, b.key) } else { (b.key, a.key) };
                        keys.push(AnnotatedKey {
                            key: combine_keys(lo, hi),
                            size: AnnotatedKey::UNKNOWN_SIZE,
                            psize: a.size.min(b.size),
                        });
                    }
                }
                out.records.push(KeyedRecord { rid: r.rid, keys });
            }
            out
        })
        .collect();

    let mut merged = IntersectOutput::default();
    for p in parts {
        merged.records.extend(p.records);
        merged.dropped_records += p.dropped_records;
    }
    merged
}
