use sha2::{Digest, Sha256};

/// Deterministic identifier from a namespace plus parts.
///
/// Parts are length-delimited before hashing so that ("ab", "c") and
/// ("a", "bc") never collide. Returns the first 16 hex characters of the
/// SHA-256 digest.
pub fn content_id(namespace: &str, parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(namespace.as_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
