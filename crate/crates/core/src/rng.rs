//! Seed derivation for independent substreams.
//!
//! Every stochastic object is a pure function of a `u64` seed. Per-item seeds
//! are derived from `(master, index)` by a splitmix64 mix, so items can be
//! generated in any order or in parallel with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of substream `stream` under `master`. Injective in `stream`.
#[inline]
pub fn mix_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ stream)
}

/// Seed for a named purpose (schedules, runs, ...) so unrelated substreams
/// of one master seed never collide.
pub fn tagged_seed(master: u64, tag: &str) -> u64 {
    tag.bytes().fold(splitmix64(master), |acc, b| splitmix64(acc ^ u64::from(b)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
