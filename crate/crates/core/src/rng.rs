//! Seeded random streams.
//!
//! Every stream is a ChaCha20 generator keyed by `SHA-256(seed_le ‖ role)`,
//! so adding a new role never shifts the numbers drawn by an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha20Rng;

pub fn stream(seed: u64, role: &str) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(role.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    ChaCha20Rng::from_seed(key)
}
