//! Stable configuration digests for output provenance.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of the compact JSON encoding of `value`.
pub fn config_digest<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes to JSON");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
