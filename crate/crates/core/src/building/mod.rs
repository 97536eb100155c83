//! Top-level block building: turns records into the record → keys inverted
//! index using identity, token or LSH strategies per column.

mod lsh;
mod text;

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lsh::{
    band_attribute, band_keys, lsh_keys, lsh_probability, minhash_signature, signature_agreement,
    simulate_band_sharing, BandSharingEstimate,
};
pub use text::{normalize, Tokenizer};

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};
use crate::model::{hash_key, KeyHash, KeyedRecord};

/// Column name that selects every attribute for token blocking.
pub const ALL_COLUMNS: &str = "*";

/// Attribute id of schema-agnostic token keys. A token hashes to the same
/// key whichever attribute it came from.
pub const TOKEN_NAMESPACE: &str = "\u{0}token";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Identity,
    Token,
    Lsh,
}

/// Block building strategy for one column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnStrategy {
    pub column: String,
    pub kind: StrategyKind,
    #[serde(default)]
    pub tokenizer: Tokenizer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsh_bands: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsh_band_width: Option<usize>,
}

impl ColumnStrategy {
    pub fn identity(column: &str) -> Self {
        Self { column: column.into(), kind: StrategyKind::Identity, tokenizer: Tokenizer::Word, lsh_bands: None, lsh_band_width: None }
    }

    pub fn token(column: &str, tokenizer: Tokenizer) -> Self {
        Self { column: column.into(), kind: StrategyKind::Token, tokenizer, lsh_bands: None, lsh_band_width: None }
    }

    pub fn lsh(column: &str, tokenizer: Tokenizer, bands: usize, band_width: usize) -> Self {
        Self {
            column: column.into(),
            kind: StrategyKind::Lsh,
            tokenizer,
            lsh_bands: Some(bands),
            lsh_band_width: Some(band_width),
        }
    }

    /// Largest number of keys this strategy can emit for one record with
    /// `values` values in its column. `None` means unbounded by the config
    /// (token blocking).
    pub fn max_keys_per_record(&self, values: usize) -> Option<usize> {
        match self.kind {
            StrategyKind::Identity => Some(values),
            StrategyKind::Lsh => Some(self.lsh_bands.unwrap_or(0)),
            StrategyKind::Token => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.column.is_empty() {
            return Err(Error::Config("strategy column must be non-empty".into()));
        }
        if self.column == ALL_COLUMNS && self.kind != StrategyKind::Token {
            return Err(Error::Config(format!("column {ALL_COLUMNS:?} is only valid for token strategies")));
        }
        match (self.kind, self.lsh_bands, self.lsh_band_width) {
            (StrategyKind::Lsh, Some(b), Some(w)) if b >= 1 && w >= 1 => Ok(()),
            (StrategyKind::Lsh, ..) => Err(Error::Config(format!(
                "lsh strategy on {:?} needs lsh_bands >= 1 and lsh_band_width >= 1",
                self.column
            ))),
            (_, None, None) => Ok(()),
            _ => Err(Error::Config(format!(
                "lsh_bands / lsh_band_width only apply to lsh strategies (column {:?})",
                self.column
            ))),
        }
    }
}

/// Full block building configuration, typically read from a TOML or JSON
/// file:
///
/// ```toml
/// seed = 7
///
/// [[strategy]]
/// column = "title"
/// kind = "lsh"
/// tokenizer = "word"      # or "word-ngram:2", "char-qgram:3"
/// lsh_bands = 14
/// lsh_band_width = 4
///
/// [[strategy]]
/// column = "year"
/// kind = "identity"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockingConfig {
    #[serde(rename = "strategy")]
    pub strategies: Vec<ColumnStrategy>,
    #[serde(default)]
    pub seed: u64,
}

impl BlockingConfig {
    pub fn new(strategies: Vec<ColumnStrategy>, seed: u64) -> Self {
        Self { strategies, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("blocking config needs at least one strategy".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.strategies {
            s.validate()?;
            if !seen.insert((s.column.as_str(), s.kind)) {
                return Err(Error::Config(format!("duplicate {:?} strategy for column {:?}", s.kind, s.column)));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `.json` files as JSON and anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// A strategy resolved against a dataset's columns.
#[derive(Debug, Clone)]
struct Resolved<'a> {
    strategy: &'a ColumnStrategy,
    columns: Vec<usize>,
}

fn resolve<'a>(config: &'a BlockingConfig, dataset_columns: &[String]) -> Result<Vec<Resolved<'a>>> {
    config
        .strategies
        .iter()
        .map(|s| {
            let columns = if s.column == ALL_COLUMNS {
                (0..dataset_columns.len()).collect()
            } else {
                let idx = dataset_columns
                    .iter()
                    .position(|c| *c == s.column)
                    .ok_or_else(|| Error::Config(format!("column {:?} not present in input", s.column)))?;
                vec![idx]
            };
            Ok(Resolved { strategy: s, columns })
        })
        .collect()
}

/// Identity keys of one column: one key per distinct non-empty normalized
/// value, hashed with the column name.
pub fn identity_keys(values: &[String], column: &str) -> Vec<KeyHash> {
    values
        .iter()
        .map(|v| normalize(v))
        .filter(|v| !v.is_empty())
        .map(|v| hash_key(column, &v))
        .collect()
}

/// Distinct normalized tokens of a set of values.
pub fn token_set<'a>(values: impl IntoIterator<Item = &'a String>, tokenizer: Tokenizer) -> Vec<String> {
    let mut tokens = Vec::new();
    for v in values {
        tokenizer.tokenize_into(&normalize(v), &mut tokens);
    }
    tokens.sort_unstable();
    tokens.dedup();
    tokens
}

/// Token keys hashed without an attribute id.
pub fn token_keys<'a>(values: impl IntoIterator<Item = &'a String>, tokenizer: Tokenizer) -> Vec<KeyHash> {
    token_set(values, tokenizer).iter().map(|t| hash_key(TOKEN_NAMESPACE, t)).collect()
}

fn record_keys(record: &Record, resolved: &[Resolved<'_>], seed: u64) -> KeyedRecord {
    let mut keys = Vec::new();
    for r in resolved {
        let s = r.strategy;
        let values = r.columns.iter().flat_map(|&c| &record.values[c]);
        match s.kind {
            StrategyKind::Identity => keys.extend(identity_keys(&record.values[r.columns[0]], &s.column)),
            StrategyKind::Token => keys.extend(token_keys(values, s.tokenizer)),
            StrategyKind::Lsh => {
                let tokens = token_set(values, s.tokenizer);
                let (b, w) = (s.lsh_bands.unwrap_or(1), s.lsh_band_width.unwrap_or(1));
                keys.extend(lsh_keys(tokens.iter().map(String::as_str), &s.column, b, w, seed));
            }
        }
    }
    KeyedRecord::from_keys(record.rid, keys)
}

/// Builds one [`KeyedRecord`] per input record, in input order.
pub fn build_index(dataset: &Dataset, config: &BlockingConfig) -> Result<Vec<KeyedRecord>> {
    config.validate()?;
    let resolved = resolve(config, &dataset.columns)?;
    Ok(dataset.records.par_iter().map(|r| record_keys(r, &resolved, config.seed)).collect())
}
