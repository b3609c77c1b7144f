//! Stable hashing and seed derivation.
//!
//! Every random draw in the crate goes through a [`ChaCha8Rng`] seeded from an
//! explicit value, usually derived from a base seed plus string keys (task id,
//! format fingerprint, ...). The derivation is platform independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// SHA-256 over length-prefixed parts, so `["ab", "c"]` and `["a", "bc"]` differ.
pub fn stable_digest<I, P>(parts: I) -> [u8; 32]
where
    I: IntoIterator<Item = P>,
    P: AsRef<[u8]>,
{
    let mut hasher = Sha256::new();
    for part in parts {
        let bytes = part.as_ref();
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    let out = hasher.finalize();
    let mut digest = [0u8; 32];
    digest.copy_from_slice(&out);
    digest
}

pub fn stable_hex<I, P>(parts: I) -> String
where
    I: IntoIterator<Item = P>,
    P: AsRef<[u8]>,
{
    hex::encode(stable_digest(parts))
}

/// Derive a child seed from a base seed and a list of keys.
pub fn derive_seed(base: u64, keys: &[&str]) -> u64 {
    let base_bytes = base.to_le_bytes();
    let parts = std::iter::once(&base_bytes[..]).chain(keys.iter().map(|k| k.as_bytes()));
    let digest = stable_digest(parts);
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform value in `[0, 1)` keyed by a base seed and string keys.
pub fn unit_interval(base: u64, keys: &[&str]) -> f64 {
    (derive_seed(base, keys) >> 11) as f64 / (1u64 << 53) as f64
}
