//! Hashed data model shared by every stage of the pipeline.
//!
//! After block building, records are reduced to a 64-bit [`RecordId`] and a
//! list of 128-bit [`KeyHash`] values. Attribute payloads never flow through
//! the engine iterations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Byte placed between the attribute id and the value before hashing so that
/// `("ab", "c")` and `("a", "bc")` hash differently.
pub const KEY_SEPARATOR: u8 = 0x1F;

/// Opaque 64-bit record identifier, unique within one dataset run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(pub u64);

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// 128-bit blocking key hash.
///
/// Only produced by [`hash_key`] (and its byte variant) or by
/// [`combine_keys`]; never by arithmetic.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyHash(pub u128);

impl KeyHash {
    /// Lowercase, zero-padded 32 digit hex form used by the output formats.
    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        if s.len() != 32 {
            return Err(Error::Parse(format!("key hash must be 32 hex digits, got {s:?}")));
        }
        u128::from_str_radix(s, 16)
            .map(KeyHash)
            .map_err(|e| Error::Parse(format!("bad key hash {s:?}: {e}")))
    }
}

impl fmt::Debug for KeyHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyHash({:032x})", self.0)
    }
}

impl fmt::Display for KeyHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

/// Murmur3 x64/128 with seed 0 over `attribute_id ++ 0x1F ++ value`.
pub fn hash_key(attribute_id: &str, normalized_value: &str) -> KeyHash {
    hash_key_bytes(attribute_id, normalized_value.as_bytes())
}

/// Same digest as [`hash_key`] for a binary value (LSH band digests).
pub fn hash_key_bytes(attribute_id: &str, value: &[u8]) -> KeyHash {
    debug_assert!(!attribute_id.is_empty(), "attribute id must be non-empty");
    let mut buf = Vec::with_capacity(attribute_id.len() + 1 + value.len());
    buf.extend_from_slice(attribute_id.as_bytes());
    buf.push(KEY_SEPARATOR);
    buf.extend_from_slice(value);
    KeyHash(fastmurmur3::murmur3_x64_128(&buf, 0))
}

/// Key of the intersection of two blocks: Murmur3 x64/128 over the 32-byte
/// little-endian concatenation of `a` then `b`.
///
/// Callers canonicalize so that `a < b`; the digest itself is not symmetric.
pub fn combine_keys(a: KeyHash, b: KeyHash) -> KeyHash {
    assert!(a < b, "combine_keys requires a < b ({a} >= {b})");
    let mut buf = [0u8; 32];
    buf[..16].copy_from_slice(&a.0.to_le_bytes());
    buf[16..].copy_from_slice(&b.0.to_le_bytes());
    KeyHash(fastmurmur3::murmur3_x64_128(&buf, 0))
}

/// 128-bit digest of a record id, folded by XOR into membership hashes.
pub fn record_digest(rid: RecordId) -> u128 {
    fastmurmur3::murmur3_x64_128(&rid.0.to_le_bytes(), 0)
}

/// A blocking key together with its size annotations.
///
/// `size` is the exact block size once counted (0 while unknown); `psize`
/// is the smallest parent block size carried through an intersection
/// (`u32::MAX` for top-level keys, which have no parent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotatedKey {
    pub key: KeyHash,
    pub size: u32,
    pub psize: u32,
}

impl AnnotatedKey {
    pub const UNKNOWN_SIZE: u32 = 0;
    pub const NO_PARENT: u32 = u32::MAX;

    pub fn top_level(key: KeyHash) -> Self {
        Self { key, size: Self::UNKNOWN_SIZE, psize: Self::NO_PARENT }
    }

    pub fn has_parent(&self) -> bool {
        self.psize != Self::NO_PARENT
    }
}

/// One row of the record → keys inverted index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyedRecord {
    pub rid: RecordId,
    pub keys: Vec<AnnotatedKey>,
}

impl KeyedRecord {
    /// Builds a row from raw keys, sorting them and removing duplicates.
    pub fn from_keys(rid: RecordId, keys: impl IntoIterator<Item = KeyHash>) -> Self {
        let mut keys: Vec<KeyHash> = keys.into_iter().collect();
        keys.sort_unstable();
        keys.dedup();
        Self { rid, keys: keys.into_iter().map(AnnotatedKey::top_level).collect() }
    }

    pub fn key_hashes(&self) -> impl Iterator<Item = KeyHash> + '_ {
        self.keys.iter().map(|k| k.key)
    }
}

/// Selects the probabilistic or exact variant of the counting and
/// membership structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approximation {
    /// Count-Min Sketch for block sizes, Bloom filter for over-size membership.
    #[default]
    Sketch,
    /// Exact hash-map counting and exact set membership. Used to compare the
    /// engine against brute-force references without probabilistic effects.
    Exact,
}

/// Thresholds and sizing knobs of the blocking engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineParams {
    pub max_block_size: u32,
    pub max_keys: usize,
    pub max_similarity: f64,
    pub max_iterations: usize,
    pub bloom_target_fpr: f64,
    pub cms_width: usize,
    pub cms_depth: usize,
    pub seed: u64,
    pub approximation: Approximation,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            max_block_size: 500,
            max_keys: 80,
            max_similarity: 0.9,
            max_iterations: 20,
            bloom_target_fpr: 1e-8,
            cms_width: 1 << 20,
            cms_depth: 5,
            seed: 0,
            approximation: Approximation::Sketch,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.max_block_size < 2 {
            return fail(format!("max_block_size must be >= 2, got {}", self.max_block_size));
        }
        if self.max_keys < 2 {
            return fail(format!("max_keys must be >= 2, got {}", self.max_keys));
        }
        if !(self.max_similarity > 0.0 && self.max_similarity <= 1.0) {
            return fail(format!("max_similarity must be in (0, 1], got {}", self.max_similarity));
        }
        if self.max_iterations < 1 {
            return fail("max_iterations must be >= 1".to_string());
        }
        if !(self.bloom_target_fpr > 0.0 && self.bloom_target_fpr < 1.0) {
            return fail(format!("bloom_target_fpr must be in (0, 1), got {}", self.bloom_target_fpr));
        }
        if self.cms_width == 0 || self.cms_depth == 0 {
            return fail("cms_width and cms_depth must be positive".to_string());
        }
        Ok(())
    }
}
