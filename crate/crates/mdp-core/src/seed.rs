//! Seed derivation and content digests.

use sha2::{Digest, Sha256};

/// Derives an independent 64-bit seed from a root seed and a path of tags.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    for t in tags {
        h.update(t.to_le_bytes());
    }
    let out = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&out[..8]);
    u64::from_le_bytes(b)
}

/// Lowercase hex sha256 of `bytes`.
pub fn digest_hex(bytes: &[u8]) -> String {
    let out = Sha256::digest(bytes);
    out.iter().map(|b| format!("{b:02x}")).collect()
}
