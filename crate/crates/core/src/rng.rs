//! Seed plumbing for reproducible corpora.
//!
//! All randomness flows through ChaCha8 seeded from a `u64`. Independent
//! streams (one per board, separate streams for solution and clue sampling)
//! are derived from a base seed with SplitMix64 so that corpora are stable
//! under reordering or parallel generation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 output function (Steele, Lea & Flood 2014). One invertible
/// mixing round; used only to decorrelate derived seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for sub-stream `stream` of the generator family rooted at `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}

/// The one RNG used everywhere. ChaCha8 is seedable, portable, and fast
/// enough that its stream identity is part of the corpus format.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
