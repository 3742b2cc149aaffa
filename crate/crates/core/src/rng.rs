//! Deterministic random-stream derivation.
//!
//! Every consumer of randomness owns an independent ChaCha stream keyed by
//! `(seed, purpose, index)`. Training derives one stream per iteration, so
//! resuming from a checkpoint continues the exact same draw sequence and
//! results do not depend on worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Network weight initialization.
pub const STREAM_INIT: u64 = 0;
/// Per-iteration training batches.
pub const STREAM_TRAIN: u64 = 1;
/// Held-out evaluation samples.
pub const STREAM_EVAL: u64 = 2;
/// Hyperparameter search draws and per-trial seeds.
pub const STREAM_SEARCH: u64 = 3;
/// Baseline decomposition-time averaging.
pub const STREAM_BASELINE: u64 = 4;

/// Derive the RNG for stream `(seed, purpose, index)`.
pub fn stream_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&purpose.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
