//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit RNG. Streams are ChaCha8
//! generators whose 256-bit seed is the SHA-256 digest of a domain tag and
//! a tuple of 64-bit keys, so independent tasks (cells, replications,
//! pixels) get independent streams regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Stream keyed by an arbitrary tag and key tuple.
pub fn keyed_stream(tag: &str, keys: &[u64]) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    for k in keys {
        hasher.update(k.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Stream for one Monte Carlo replication.
pub fn replication_stream(seed: u64, looks_index: usize, size_index: usize, replication: usize) -> StreamRng {
    keyed_stream(
        "enl/replication",
        &[seed, looks_index as u64, size_index as u64, replication as u64],
    )
}

/// General-purpose stream for a user-supplied seed.
pub fn seeded_stream(seed: u64) -> StreamRng {
    keyed_stream("enl/seed", &[seed])
}
