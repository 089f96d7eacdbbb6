//! Stable seed derivation.
//!
//! Seeds are derived from a SHA-256 digest so that they do not depend on
//! the standard library's hasher, process, or platform. Corpora can then be
//! sharded or reordered without changing any per-sample result.

use sha2::{Digest, Sha256};

/// Derives a child seed from `master` and a string key.
pub fn derive_seed(master: u64, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((key.len() as u64).to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Stable 64-bit digest of arbitrary bytes.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
