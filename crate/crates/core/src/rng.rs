//! Seed derivation shared by every stochastic stage.
//!
//! All randomness comes from `ChaCha8Rng` streams whose seeds are derived
//! from a base seed and a list of integer tags, so a run can be replayed
//! (or resumed) from any step without carrying generator state around.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and an ordered list of tags.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(seed.wrapping_add(GOLDEN)), |acc, &t| {
        mix64(acc ^ t.wrapping_add(GOLDEN).wrapping_mul(0xD6E8_FEB8_6659_FD93))
    })
}

pub fn rng_from(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}
