//! Seeded synthetic data: random overlapping key indexes and a people-like
//! registry with planted duplicates.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::building::{BlockingConfig, ColumnStrategy};
use crate::dataset::{Dataset, Record};
use crate::hashing::derive_seed;
use crate::model::{hash_key, KeyedRecord, RecordId};

/// How one synthetic key column draws its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnSpec {
    /// Zipf-distributed value out of `vocab`; `exponent == 0` is uniform.
    Zipf { vocab: u64, exponent: f64, missing: f64 },
    /// Same value as an earlier column under another attribute id, so the
    /// two columns produce identical blocks.
    Copy { of: usize },
    /// An earlier column's value divided by `factor`: every block of that
    /// column is nested inside one block of this column.
    Coarsen { of: usize, factor: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSpec {
    pub records: usize,
    pub columns: Vec<ColumnSpec>,
    pub seed: u64,
}

impl IndexSpec {
    /// A random spec with 100..=`max_records` records and 3 to 7 columns
    /// mixing skewed, copied and nested values.
    pub fn random(rng: &mut impl Rng, max_records: usize) -> Self {
        let records = rng.gen_range(100..=max_records.max(100));
        let n = rng.gen_range(3..=7);
        let mut columns = Vec::with_capacity(n);
        for c in 0..n {
            let pick = if c == 0 { 0 } else { rng.gen_range(0..10) };
            columns.push(match pick {
                8 => ColumnSpec::Copy { of: rng.gen_range(0..c) },
                9 => ColumnSpec::Coarsen { of: rng.gen_range(0..c), factor: rng.gen_range(2..6) },
                _ => ColumnSpec::Zipf {
                    vocab: rng.gen_range(1..=(records as u64 / 2).max(2)),
                    exponent: [0.0, 0.5, 1.0, 1.5][rng.gen_range(0..4)],
                    missing: [0.0, 0.0, 0.1, 0.4][rng.gen_range(0..4)],
                },
            });
        }
        Self { records, columns, seed: rng.gen() }
    }
}

/// Builds an index whose column `c` value `v` becomes key `hash_key("c{c}", v)`.
pub fn random_index(spec: &IndexSpec) -> Vec<KeyedRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let samplers: Vec<Option<Zipf<f64>>> = spec
        .columns
        .iter()
        .map(|c| match c {
            ColumnSpec::Zipf { vocab, exponent, .. } => Some(Zipf::new((*vocab).max(1), *exponent).expect("valid zipf")),
            _ => None,
        })
        .collect();
    let mut values: Vec<Option<u64>> = vec![None; spec.columns.len()];
    (0..spec.records)
        .map(|rid| {
            for (c, col) in spec.columns.iter().enumerate() {
                values[c] = match col {
                    ColumnSpec::Zipf { missing, .. } => {
                        let v = samplers[c].as_ref().expect("sampler").sample(&mut rng) as u64;
                        (!rng.gen_bool(*missing)).then_some(v)
                    }
                    ColumnSpec::Copy { of } => values[*of],
                    ColumnSpec::Coarsen { of, factor } => values[*of].map(|v| v / factor),
                };
            }
            let keys = values
                .iter()
                .enumerate()
                .filter_map(|(c, v)| v.map(|v| hash_key(&format!("c{c}"), &v.to_string())));
            KeyedRecord::from_keys(RecordId(rid as u64), keys)
        })
        .collect()
}

/// A people registry split into regions of `region_size` records. Every
/// column except `gender` draws its values per region, so block size
/// statistics do not change with the total record count. Popular first and
/// last names form over-sized blocks that only their intersection splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeopleSpec {
    pub records: usize,
    pub region_size: usize,
    /// Probability that a record is a perturbed copy of an earlier person.
    pub duplicate_rate: f64,
    pub seed: u64,
}

impl PeopleSpec {
    pub fn new(records: usize, seed: u64) -> Self {
        Self { records, region_size: 50_000, duplicate_rate: 0.1, seed }
    }
}

pub const PEOPLE_COLUMNS: [&str; 7] = ["entity", "first", "last", "gender", "birth", "street", "city"];

/// Identity blocking on every people column except `entity`.
pub fn people_config() -> BlockingConfig {
    BlockingConfig::new(PEOPLE_COLUMNS[1..].iter().map(|c| ColumnStrategy::identity(c)).collect(), 0)
}

const POPULAR_SHARE: f64 = 0.3;
const POPULAR_NAMES: u32 = 8;

fn name(rng: &mut ChaCha8Rng, prefix: &str, region: usize, rare: u32) -> String {
    if rng.gen_bool(POPULAR_SHARE) {
        format!("r{region}-{prefix}p{}", rng.gen_range(0..POPULAR_NAMES))
    } else {
        format!("r{region}-{prefix}{}", rng.gen_range(0..rare))
    }
}

fn person(rng: &mut ChaCha8Rng, region: usize) -> [String; 6] {
    let gender = ["f", "m"][rng.gen_range(0..2)];
    [
        name(rng, gender, region, 2500),
        name(rng, "l", region, 10_000),
        gender.to_string(),
        format!("r{region}-{}-{:02}-{:02}", rng.gen_range(1940..2010), rng.gen_range(1..13), rng.gen_range(1..29)),
        format!("r{region}-s{}", rng.gen_range(0..20_000)),
        format!("r{region}-c{}", rng.gen_range(0..5_000)),
    ]
}

/// Generates the registry; column `entity` holds the person id shared by
/// duplicates.
pub fn people_dataset(spec: &PeopleSpec) -> Dataset {
    let region_size = spec.region_size.max(1);
    let regions = spec.records.div_ceil(region_size);
    let parts: Vec<Vec<Record>> = (0..regions)
        .into_par_iter()
        .map(|region| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, region as u64));
            let start = region * region_size;
            let end = (start + region_size).min(spec.records);
            let mut people: Vec<(u64, [String; 6])> = Vec::with_capacity(end - start);
            for rid in start..end {
                let copy = !people.is_empty() && rng.gen_bool(spec.duplicate_rate);
                let (entity, fields) = if copy {
                    let (entity, mut fields) = people[rng.gen_range(0..people.len())].clone();
                    let col = rng.gen_range(0..fields.len());
                    fields[col] = person(&mut rng, region)[col].clone();
                    (entity, fields)
                } else {
                    (rid as u64, person(&mut rng, region))
                };
                people.push((entity, fields));
            }
            people
                .into_iter()
                .enumerate()
                .map(|(i, (entity, fields))| {
                    let mut values = Vec::with_capacity(PEOPLE_COLUMNS.len());
                    values.push(vec![entity.to_string()]);
                    values.extend(fields.into_iter().map(|f| vec![f]));
                    Record { rid: RecordId((start + i) as u64), values }
                })
                .collect()
        })
        .collect();
    let mut ds = Dataset::new(PEOPLE_COLUMNS.iter().map(|c| c.to_string()).collect());
    ds.records = parts.into_iter().flatten().collect();
    ds
}
