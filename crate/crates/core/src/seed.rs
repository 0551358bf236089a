//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose key
//! is the SHA-256 digest of a 64-bit master seed and a text label. Streams for
//! different labels are independent and can be created in any order, from any
//! thread, in any process, and still agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Returns the random stream keyed by `(seed, label)`.
pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"hdagg/v1\0");
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed, for handing a sub-experiment its own master seed.
pub fn derive(seed: u64, label: &str) -> u64 {
    use rand::RngCore;
    stream(seed, label).next_u64()
}
