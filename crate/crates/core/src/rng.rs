//! Seeding for reproducible chains.
//!
//! Every chain draws from a ChaCha8 generator (`rand_chacha` 0.3), seeded with
//! `ChaCha8Rng::seed_from_u64`. Replicate `r` of a batch with base seed `s`
//! uses the sub-seed `splitmix64(s + (r + 1) · 0x9E3779B97F4A7C15)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

/// Human-readable description of the generator, recorded in reports.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.3, seed_from_u64); replicate sub-seeds via SplitMix64";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed of stream `stream` derived from `seed`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn chain_rng(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}
