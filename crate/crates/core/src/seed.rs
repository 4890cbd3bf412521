//! Deterministic seed fan-out.
//!
//! A top-level seed is split into independent child seeds by hashing
//! `(seed, stream, index)` through SplitMix64, so work items can be scheduled in any
//! order and still draw identical random numbers.

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed for item `index` of the named `stream`.
pub fn derive(seed: u64, stream: &str, index: u64) -> u64 {
    let tag = stream
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01B3));
    splitmix64(splitmix64(seed ^ tag).wrapping_add(index))
}
