//! Hashed Dynamic Blocking: scalable candidate-pair generation for entity
//! resolution.
//!
//! Records are turned into an inverted index of 128-bit blocking keys
//! ([`building`]), over-sized blocks are intersected until every block is
//! right-sized ([`engine`]), and the surviving blocks are expanded into a
//! deduplicated pair set ([`pairs`]).

pub mod building;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod eval;
pub mod hashing;
pub mod io;
pub mod model;
pub mod pairs;
pub mod pipeline;
pub mod prep;
pub mod sketch;
pub mod synth;

pub use building::{build_index, BlockingConfig, ColumnStrategy, StrategyKind, Tokenizer};
pub use dataset::{read_dataset, write_csv, Dataset, InputFormat, ReadOptions};
pub use engine::{hashed_dynamic_blocking, Engine, EngineOutput, IterationStats};
pub use error::{Error, Result};
pub use eval::{LabelSet, PairSet};
pub use model::{
    combine_keys, hash_key, AnnotatedKey, Approximation, EngineParams, KeyHash, KeyedRecord, RecordId,
};
pub use pairs::{remove_dupe_pairs, BlockPairSet, CandidatePair, PairOutput};
