//! Small 64-bit mixing helpers used to derive per-row and per-position hash
//! functions from an already uniform 128-bit key or a base token hash.

/// SplitMix64 finalizer. A bijection on `u64` with good avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic sub-seed number `index` of `seed`.
#[inline]
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Maps a uniform 64-bit value onto `0..n` without division.
#[inline]
pub fn reduce(h: u64, n: usize) -> usize {
    ((h as u128 * n as u128) >> 64) as usize
}

#[inline]
pub(crate) fn split(key: u128) -> (u64, u64) {
    (key as u64, (key >> 64) as u64)
}
