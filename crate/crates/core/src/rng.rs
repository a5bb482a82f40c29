//! The single random stream type used everywhere.
//!
//! ChaCha8 gives the same sequence on every platform for a given seed. All
//! stochastic operations take `&mut StreamRng` explicitly, and each documents
//! the order in which it consumes draws.

use rand::SeedableRng;

pub type StreamRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
