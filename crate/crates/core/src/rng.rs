//! Deterministic random-number plumbing.
//!
//! Every experiment is a pure function of `(master seed, config)`. Each
//! logical stream (an experiment section, a trial index) gets its own
//! generator seeded by a splitmix64 hash of the master seed, so trials are
//! independent of execution order and safe to run in parallel.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

/// splitmix64 finalizer; full-period mix of the 64-bit state.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a named sub-stream of a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(master ^ mix(stream))
}

/// Generator for stream `stream` (an experiment section).
pub fn stream_rng(master: u64, stream: u64) -> LabRng {
    LabRng::seed_from_u64(derive_seed(master, stream))
}

/// Generator for trial `trial` within stream `stream`.
pub fn trial_rng(master: u64, stream: u64, trial: u64) -> LabRng {
    LabRng::seed_from_u64(derive_seed(derive_seed(master, stream), trial))
}
