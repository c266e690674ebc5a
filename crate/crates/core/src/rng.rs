//! Seeding helpers. Every stochastic routine takes an explicit seed or RNG so
//! that runs are reproducible regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from `(base, stream, index)`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(base) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)) ^ index)
}

pub fn rng_from_seed(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named sub-streams.
pub mod stream {
    pub const SUPPORT: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const PILOT: u64 = 3;
    pub const CHAIN: u64 = 4;
    pub const GRID: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
    pub const TUNING: u64 = 7;
}
