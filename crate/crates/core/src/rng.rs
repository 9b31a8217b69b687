//! Seeded random streams.
//!
//! A run seed expands into independent ChaCha8 streams, one per purpose, so
//! that e.g. changing how many inputs are drawn never perturbs the noise or
//! the task mutations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Target = 1,
    Inputs = 2,
    Noise = 3,
    Mutation = 4,
    Init = 5,
    Shuffle = 6,
    Probe = 7,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
