//! Reproducible random streams.
//!
//! Every trial of every experiment draws from its own ChaCha8 stream. The
//! stream for `(master_seed, index)` is the generator seeded by
//! `ChaCha8Rng::seed_from_u64(master_seed)` with its 64-bit stream counter set
//! to `index`. Streams are therefore independent of scheduling and of the
//! number of worker threads, and any single trial can be regenerated alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The generator for trial `index` under `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
