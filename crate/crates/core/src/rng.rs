//! Seeded random streams.
//!
//! Every run has one `u64` seed. Each consumer gets its own ChaCha8 stream
//! derived from that seed so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name written to manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64 + set_stream";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Nature = 1,
    Outcomes = 2,
    Agents = 3,
    Tasks = 4,
    ModelInit = 5,
    Selector = 6,
    Passengers = 7,
}

pub fn substream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// A stream for a keyed sub-purpose, e.g. one loss table per `(seed, z)`.
pub fn keyed(seed: u64, purpose: Purpose, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(purpose as u64);
    rng
}
