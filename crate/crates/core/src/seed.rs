//! Counter-based seed derivation.
//!
//! A single run seed fans out into independent per-component streams by
//! hashing `(seed, tag, index)` with SplitMix64. The derived value depends
//! only on its inputs, never on the order components are created in, so
//! running episodes or scenarios in parallel does not change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type Rng = ChaCha8Rng;

/// Stream tags. Each subsystem draws from its own tag so that adding draws
/// in one place never shifts the randomness seen by another.
pub mod tag {
    pub const PRICE_PATH: u64 = 0x5052_4943;
    pub const FILLS: u64 = 0x4649_4c4c;
    pub const EPISODE: u64 = 0x4550_4953;
    pub const STRATEGY: u64 = 0x5354_5241;
    pub const TOURNAMENT: u64 = 0x544f_5552;
    pub const COLLECT: u64 = 0x434f_4c4c;
    pub const INIT: u64 = 0x494e_4954;
    pub const TRAIN: u64 = 0x5452_4e20;
    pub const ROLLOUT: u64 = 0x524f_4c4c;
    pub const BENCHMARK: u64 = 0x4245_4e43;
    pub const PPO_CANDIDATE: u64 = 0x5050_4f43;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of component `(tag, index)` under `seed`.
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index)
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn derived_rng(seed: u64, tag: u64, index: u64) -> Rng {
    rng(derive(seed, tag, index))
}
