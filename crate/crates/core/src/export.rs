//! Canonical JSON and provenance hashes for output files.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Pretty JSON with object keys in sorted order and shortest round-trip floats.
pub fn canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Hex SHA-256 of the canonical compact JSON of `value`.
pub fn content_hash<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let bytes = serde_json::to_vec(&v)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
