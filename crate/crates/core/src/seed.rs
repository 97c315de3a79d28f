//! Stable seed derivation.
//!
//! Every randomized step draws from a ChaCha stream whose seed is a hash of
//! the master seed and a list of labels (dataset, learner, iteration, ...).
//! The hash only depends on those values, so results do not depend on
//! scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StudyRng = ChaCha8Rng;

/// One component of a seed derivation path.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for SeedPart<'a> {
    fn from(s: &'a str) -> Self {
        SeedPart::Str(s)
    }
}

impl From<u64> for SeedPart<'_> {
    fn from(v: u64) -> Self {
        SeedPart::Int(v)
    }
}

impl From<usize> for SeedPart<'_> {
    fn from(v: usize) -> Self {
        SeedPart::Int(v as u64)
    }
}

pub fn derive_seed(master: u64, parts: &[SeedPart<'_>]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for part in parts {
        match part {
            SeedPart::Str(s) => {
                h.update([0u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            SeedPart::Int(v) => {
                h.update([1u8]);
                h.update(v.to_le_bytes());
            }
        }
    }
    let out = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&out[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> StudyRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
