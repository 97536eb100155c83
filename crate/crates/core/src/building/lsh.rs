//! MinHash signatures and LSH banding.
//!
//! A signature of `m = bands * band_width` minhashes is cut into `bands`
//! groups of `band_width` consecutive values; each group is hashed (with the
//! column and band index) into one blocking key. Two values with token-set
//! Jaccard similarity `j` share at least one band key with probability
//! [`lsh_probability`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::hashing::{derive_seed, mix64};
use crate::model::{hash_key_bytes, KeyHash};

/// `m` seeded minhashes of a token set; `None` for an empty set.
///
/// Position `i` is the minimum over tokens of `mix64(xxh3(token) ^ s_i)`
/// where `s_i` is derived from `(seed, i)`.
pub fn minhash_signature<'a>(tokens: impl IntoIterator<Item = &'a str>, m: usize, seed: u64) -> Option<Vec<u64>> {
    assert!(m >= 1, "signature length must be positive");
    let position_seeds: Vec<u64> = (0..m as u64).map(|i| derive_seed(seed, i)).collect();
    let mut sig = vec![u64::MAX; m];
    let mut any = false;
    for token in tokens {
        any = true;
        let base = xxh3_64_with_seed(token.as_bytes(), seed);
        for (slot, s) in sig.iter_mut().zip(&position_seeds) {
            let h = mix64(base ^ s);
            if h < *slot {
                *slot = h;
            }
        }
    }
    any.then_some(sig)
}

/// Fraction of positions on which two signatures agree; an unbiased
/// estimate of the Jaccard similarity of the underlying sets.
pub fn signature_agreement(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len(), "signatures must have equal length");
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

/// Attribute id under which band `band` of a column is hashed.
pub fn band_attribute(column: &str, bands: usize, band_width: usize, band: usize) -> String {
    format!("{column}\u{0}lsh{bands}x{band_width}#{band}")
}

/// One key per band of a full signature.
pub fn band_keys(signature: &[u64], column: &str, bands: usize, band_width: usize) -> Vec<KeyHash> {
    assert_eq!(signature.len(), bands * band_width, "signature length must equal bands * band_width");
    signature
        .chunks(band_width)
        .enumerate()
        .map(|(i, band)| {
            let bytes: Vec<u8> = band.iter().flat_map(|h| h.to_le_bytes()).collect();
            hash_key_bytes(&band_attribute(column, bands, band_width, i), &bytes)
        })
        .collect()
}

/// LSH band keys for a token set; empty when there are no tokens.
pub fn lsh_keys<'a>(
    tokens: impl IntoIterator<Item = &'a str>,
    column: &str,
    bands: usize,
    band_width: usize,
    seed: u64,
) -> Vec<KeyHash> {
    match minhash_signature(tokens, bands * band_width, seed) {
        Some(sig) => band_keys(&sig, column, bands, band_width),
        None => Vec::new(),
    }
}

/// Probability that two values with Jaccard similarity `j` share at least
/// one of `bands` keys of `band_width` minhashes: `1 - (1 - j^w)^b`.
pub fn lsh_probability(bands: usize, band_width: usize, j: f64) -> f64 {
    assert!((0.0..=1.0).contains(&j), "jaccard must be in [0, 1], got {j}");
    let band = j.powi(band_width as i32);
    if bands == 1 {
        return band;
    }
    1.0 - (1.0 - band).powi(bands as i32)
}

/// Result of a band-sharing simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandSharingEstimate {
    /// Jaccard similarity of the generated pairs (the requested value
    /// rounded to the nearest `shared / union` fraction with union ≤ 1000).
    pub jaccard: f64,
    pub samples: usize,
    pub shared: usize,
}

impl BandSharingEstimate {
    pub fn rate(&self) -> f64 {
        self.shared as f64 / self.samples as f64
    }
}

/// Smallest union size `u >= 20` for which `j * u` is an integer, falling
/// back to 1000 with rounding.
fn union_size_for(j: f64) -> (usize, usize) {
    for u in 20..=1000usize {
        let shared = (j * u as f64).round();
        if (shared / u as f64 - j).abs() < 1e-9 {
            return (u, shared as usize);
        }
    }
    (1000, (j * 1000.0).round() as usize)
}

/// Monte-Carlo estimate of the band-sharing probability: generates `samples`
/// random token-set pairs with fixed Jaccard similarity, runs them through
/// [`lsh_keys`] and counts pairs that share at least one key.
pub fn simulate_band_sharing(bands: usize, band_width: usize, j: f64, samples: usize, seed: u64) -> BandSharingEstimate {
    assert!((0.0..=1.0).contains(&j), "jaccard must be in [0, 1], got {j}");
    let (union, shared_tokens) = union_size_for(j);
    let exclusive = union - shared_tokens;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shared = 0;
    for sample in 0..samples {
        // Token ids are fresh per sample so each pair sees new hash values.
        let base: u64 = rng.gen();
        let token = |i: usize| format!("{base:016x}-{i}");
        let common: Vec<String> = (0..shared_tokens).map(token).collect();
        let only_a: Vec<String> = (shared_tokens..shared_tokens + exclusive / 2).map(token).collect();
        let only_b: Vec<String> = (shared_tokens + exclusive / 2..union).map(token).collect();
        let key_seed = derive_seed(seed, sample as u64);
        let a = lsh_keys(common.iter().chain(&only_a).map(String::as_str), "mc", bands, band_width, key_seed);
        let b = lsh_keys(common.iter().chain(&only_b).map(String::as_str), "mc", bands, band_width, key_seed);
        if a.iter().zip(&b).any(|(x, y)| x == y) {
            shared += 1;
        }
    }
    BandSharingEstimate { jaccard: shared_tokens as f64 / union as f64, samples, shared }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_give_identical_signatures() {
        let a = minhash_signature(["x", "y", "z"], 16, 1).unwrap();
        let b = minhash_signature(["z", "x", "y"], 16, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_signature_is_the_position_hash() {
        let sig = minhash_signature(["x"], 8, 3).unwrap();
        let base = xxh3_64_with_seed(b"x", 3);
        for (i, h) in sig.iter().enumerate() {
            assert_eq!(*h, mix64(base ^ derive_seed(3, i as u64)));
        }
    }

    #[test]
    fn empty_token_set_has_no_signature_or_keys() {
        assert!(minhash_signature(std::iter::empty(), 4, 0).is_none());
        assert!(lsh_keys(std::iter::empty(), "title", 3, 2, 0).is_empty());
    }

    #[test]
    fn band_keys_count_and_namespace() {
        let k1 = lsh_keys(["a", "b"], "title", 3, 8, 0);
        assert_eq!(k1.len(), 3);
        assert_eq!(k1, lsh_keys(["b", "a"], "title", 3, 8, 0));
        let k2 = lsh_keys(["a", "b"], "authors", 3, 8, 0);
        assert!(k1.iter().all(|k| !k2.contains(k)));
    }

    #[test]
    fn shared_band_means_shared_key() {
        let mut a = minhash_signature(["p", "q", "r"], 24, 5).unwrap();
        let b = minhash_signature(["s", "t"], 24, 5).unwrap();
        a[8..16].copy_from_slice(&b[8..16]);
        let ka = band_keys(&a, "c", 3, 8);
        let kb = band_keys(&b, "c", 3, 8);
        assert_eq!(ka[1], kb[1]);
        assert_ne!(ka[0], kb[0]);
    }

    #[test]
    fn closed_form_values() {
        for k in 0..=100 {
            let j = k as f64 / 100.0;
            assert_eq!(lsh_probability(1, 1, j), j);
        }
        assert_eq!(lsh_probability(7, 3, 0.0), 0.0);
        assert_eq!(lsh_probability(7, 3, 1.0), 1.0);
        assert!((lsh_probability(14, 4, 0.8) - 0.99937).abs() < 1e-5);
        assert!((lsh_probability(3, 8, 0.9) - 0.8153).abs() < 1e-4);
        assert!((lsh_probability(14, 4, 0.3) - 0.1076).abs() < 1e-4);
    }

    #[test]
    fn closed_form_is_monotone_in_jaccard() {
        for (b, w) in [(1, 1), (3, 8), (6, 7), (10, 6), (12, 5), (14, 4), (16, 3)] {
            let mut prev = 0.0;
            for step in 0..=100 {
                let p = lsh_probability(b, w, step as f64 / 100.0);
                assert!(p >= prev, "({b},{w}) decreases at {step}");
                prev = p;
            }
        }
    }

    #[test]
    fn union_size_makes_jaccard_exact() {
        assert_eq!(union_size_for(0.3), (20, 6));
        assert_eq!(union_size_for(0.8), (20, 16));
        let (u, s) = union_size_for(0.123);
        assert_eq!((u, s), (1000, 123));
    }

    // Oracle: exact Jaccard of the generated sets.
    #[test]
    fn signature_agreement_estimates_jaccard() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut est_sum, mut true_sum) = (0.0, 0.0);
        let pairs = 10_000;
        for p in 0..pairs {
            let union = rng.gen_range(10..60usize);
            let common = rng.gen_range(0..=union);
            let split = common + (union - common) / 2;
            let toks: Vec<String> = (0..union).map(|i| format!("{p}/{i}")).collect();
            let a = minhash_signature(toks[..split].iter().map(String::as_str), 128, 77).unwrap_or(vec![0; 128]);
            let b = minhash_signature(toks[..common].iter().chain(&toks[split..]).map(String::as_str), 128, 77)
                .unwrap_or(vec![1; 128]);
            est_sum += signature_agreement(&a, &b);
            true_sum += common as f64 / union as f64;
        }
        let bias = (est_sum - true_sum) / pairs as f64;
        assert!(bias.abs() <= 0.03, "mean estimate bias {bias}");
    }

    #[test]
    fn simulated_sharing_matches_closed_form_at_operating_point() {
        let est = simulate_band_sharing(14, 4, 0.8, 10_000, 21);
        assert_eq!(est.jaccard, 0.8);
        assert!((est.rate() - 0.9994).abs() <= 0.02, "rate {}", est.rate());
    }
}
