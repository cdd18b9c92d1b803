//! Seed-derivation helpers. Every stochastic ingredient of a run (parameter
//! initialization, mini-batch shuffling, power-iteration start vectors) draws
//! from its own substream of the run seed, so adding or removing one consumer
//! never perturbs the draws seen by another, and outcomes are independent of
//! the order in which runs execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Substream feeding MLP parameter initialization.
pub(crate) const STREAM_INIT: u64 = 1;
/// Substream feeding mini-batch shuffling.
pub(crate) const STREAM_BATCHES: u64 = 2;
/// Substream feeding power-iteration start vectors.
pub(crate) const STREAM_SHARPNESS: u64 = 3;

/// A ChaCha8 generator positioned on the given counter substream of `seed`.
/// Streams with different indices are statistically independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Folds `salt` into `seed` through the SplitMix64 finalizer, for consumers
/// that accept a bare integer seed instead of a generator.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
