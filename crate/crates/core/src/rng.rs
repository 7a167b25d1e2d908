//! Seeded random streams.
//!
//! Every stochastic routine draws from a ChaCha8 stream keyed by the user
//! seed and a 64-bit stream id. The stream id packs a chain index in the
//! high 32 bits and a replication (or network) index in the low 32 bits, so
//! work split across threads reproduces the sequential result exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, chain: u32, replication: u32) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((chain as u64) << 32) | replication as u64);
    rng
}
