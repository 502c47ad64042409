//! Randomness streams.
//!
//! All randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`), a
//! counter-based generator: a 64-bit seed selects the key and a 64-bit stream
//! id selects an independent keystream. A run seed therefore yields separate,
//! reproducible streams for direction sets and for scenario draws, and every
//! noise scenario regenerates its realization from its own seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

const DIRECTION_STREAM: u64 = 1;
const SCENARIO_STREAM: u64 = 2;
const REPLICATION_BASE: u64 = 1 << 32;

/// Stream used to build direction sets `T_k`.
pub fn direction_stream(seed: u64) -> StreamRng {
    stream(seed, DIRECTION_STREAM)
}

/// Stream used to draw scenarios `S_k`.
pub fn scenario_stream(seed: u64) -> StreamRng {
    stream(seed, SCENARIO_STREAM)
}

/// Independent stream for Monte Carlo replication `index`.
pub fn replication_stream(seed: u64, index: u64) -> StreamRng {
    stream(seed, REPLICATION_BASE + index)
}

/// Generator that replays the noise realization identified by `seed`.
pub fn noise_stream(seed: u64) -> StreamRng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
