//! Splittable seed derivation.
//!
//! Every randomized component takes a `u64` seed and derives child seeds with
//! [`split`], so simulations are reproducible regardless of evaluation order
//! or worker count: the stream for (cell, replicate, purpose) is a pure
//! function of the master seed and those labels.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a child seed from `seed` and an arbitrary `label`.
///
/// This is the SplitMix64 output function applied to the seed advanced by
/// `label + 1` Weyl steps, i.e. `split(seed, k)` is the (k+1)-th output of a
/// SplitMix64 stream with state `seed`. Distinct labels give decorrelated
/// children; the ChaCha key expansion downstream adds further mixing.
#[inline]
pub fn split(seed: u64, label: u64) -> u64 {
    let mut z = seed.wrapping_add(label.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic generator for the given seed.
#[inline]
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
