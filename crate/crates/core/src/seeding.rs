//! Deterministic RNG derivation.
//!
//! Every randomized stage derives its stream from a master seed plus a fixed
//! stream label, so independent work items (dataset rows, probe prompts,
//! training steps) get decorrelated generators without any shared mutable
//! state. Reductions elsewhere use fixed index order, which makes whole runs
//! reproducible bit-for-bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates nearby (seed, label) pairs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a stream label.
pub fn derive_seed(master: u64, label: u64) -> u64 {
    mix(mix(master) ^ mix(label.wrapping_mul(0xa0761d6478bd642f)))
}

/// Derive a child seed two levels deep (e.g. step then sample).
pub fn derive_seed2(master: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(master, a), b)
}

/// RNG for a derived stream.
pub fn stream_rng(master: u64, label: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label))
}

/// RNG for a two-level derived stream.
pub fn stream_rng2(master: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed2(master, a, b))
}
