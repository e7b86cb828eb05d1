//! Counter-based seed splitting.
//!
//! Every random stream is addressed by `(seed, stream, index)`. The triple is
//! hashed with the SplitMix64 finalizer into a 64-bit key that seeds a
//! ChaCha8 generator, so stream `i` never depends on how many other streams
//! were drawn before it or on which thread draws it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers. Distinct purposes never share a stream.
pub mod stream {
    pub const GENERATOR_WEIGHTS: u64 = 1;
    pub const LATENT_Z: u64 = 2;
    pub const GAUSSIAN_SAMPLES: u64 = 3;
    pub const INVERSION_NOISE: u64 = 4;
    pub const FEATURE_NET: u64 = 5;
    pub const EXPERIMENT_PAIRS: u64 = 6;
    pub const EXPERIMENT_INVERSION: u64 = 7;
    pub const REFERENCE_BATCH: u64 = 8;
    pub const EVAL_BATCH: u64 = 9;
    pub const RECONSTRUCTION_TARGETS: u64 = 10;
    pub const RECONSTRUCTION_INVERSION: u64 = 11;
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives the key for `(seed, stream, index)`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}
