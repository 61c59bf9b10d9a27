//! Run manifests: a canonical digest of the config plus provenance fields.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::time::{SystemTime, UNIX_EPOCH};

/// Provenance record written next to experiment outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub created_at_unix: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config_digest: String, master_seed: u64, outputs: Vec<String>) -> Self {
        RunManifest {
            config_digest,
            master_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_at_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs,
        }
    }
}

/// SHA-256 of the canonicalized config: keys sorted recursively, compact
/// separators. Stable under key reordering and whitespace changes.
pub fn config_digest(raw_json: &str) -> Result<String, serde_json::Error> {
    // serde_json's default map is a BTreeMap, so parsing and re-serializing
    // sorts object keys at every level
    let value: serde_json::Value = serde_json::from_str(raw_json)?;
    let canonical = serde_json::to_string(&value)?;
    let hash = Sha256::digest(canonical.as_bytes());
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}
