//! Per-trial random streams.
//!
//! Trial `i` of an experiment labelled `label` under `master_seed` draws from a
//! ChaCha8 generator keyed by `master_seed` (8 bytes, little endian) followed by
//! the first 24 bytes of SHA-256(`label`), on stream number `i`. The stream for a
//! trial therefore depends only on `(master_seed, label, i)`, never on which
//! worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Streams {
    key: [u8; 32],
}

impl Streams {
    pub fn new(master_seed: u64, label: &str) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        let digest = Sha256::digest(label.as_bytes());
        key[8..].copy_from_slice(&digest[..24]);
        Streams { key }
    }

    pub fn trial(&self, i: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(i);
        rng
    }
}

/// Derives a child seed for a nested computation (e.g. the L̂ search run inside
/// a θ̂ estimate) from a parent seed and a label.
pub fn derive_seed(master_seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
