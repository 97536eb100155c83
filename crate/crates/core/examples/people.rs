//! Blocks a synthetic people registry and prints the pipeline counters.
//!
//! cargo run --release -p hdb-core --example people -- 100000

use std::time::Instant;

use hdb_core::eval::{labels_from_entity_ids, pair_completeness, PairSet};
use hdb_core::synth::{people_config, people_dataset, PeopleSpec};
use hdb_core::{build_index, hashed_dynamic_blocking, remove_dupe_pairs, EngineParams};

fn main() -> hdb_core::Result<()> {
    let records = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let t = Instant::now();
    let ds = people_dataset(&PeopleSpec::new(records, 1));
    println!("generate: {:?}", t.elapsed());

    let t = Instant::now();
    let index = build_index(&ds, &people_config())?;
    let out = hashed_dynamic_blocking(&index, &EngineParams::default())?;
    let pairs = remove_dupe_pairs(&out.right_sized);
    println!("block: {:?}", t.elapsed());
    for s in &out.iterations {
        println!("{s:?}");
    }
    println!("blocks: {}  pairs: {}", out.block_count(), pairs.pairs.len());

    let labels = labels_from_entity_ids(ds.records.iter().map(|r| (r.rid, r.values[0][0].clone(), Vec::new())), false);
    let p = PairSet::from_pairs(pairs.pairs.iter().map(|p| (p.rid1, p.rid2)));
    println!("positives: {}  pc: {:.4}", labels.positives.len(), pair_completeness(&p, &labels)?);
    Ok(())
}
