//! Seeded randomness.
//!
//! Every stochastic component draws from [`ChaCha8Rng`]. Independent streams
//! (per episode, per evaluation run, ...) are derived from a master seed with a
//! SplitMix64 finalizer so that results do not depend on the order in which
//! streams are created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier written into output metadata.
pub const PRNG_ID: &str = "chacha8/rand_chacha-0.3+splitmix64-streams";

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a list of stream labels.
pub fn derive_seed(seed: u64, stream: &[u64]) -> u64 {
    stream
        .iter()
        .fold(splitmix64(seed), |acc, &s| splitmix64(acc ^ splitmix64(s)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: &[u64]) -> Rng {
    rng_from_seed(derive_seed(seed, stream))
}
