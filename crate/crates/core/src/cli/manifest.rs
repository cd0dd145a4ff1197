//! Reproducibility manifest written by every command.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything needed to replay a run bit-for-bit: the resolved
/// configuration, the seeds, and digests of the input files.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    /// Fully resolved configuration (defaults materialized).
    pub config: serde_json::Value,
    /// Input path → SHA-256 hex digest.
    pub input_digests: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            input_digests: BTreeMap::new(),
        }
    }

    pub fn digest_input(&mut self, path: &Path) -> std::io::Result<()> {
        let data = fs::read(path)?;
        let digest = Sha256::digest(&data);
        self.input_digests.insert(
            path.display().to_string(),
            digest.iter().map(|b| format!("{b:02x}")).collect(),
        );
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<()> {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        fs::write(out_dir.join("manifest.json"), json)
    }
}

/// SHA-256 hex digest of a file (used by tests to compare outputs).
pub fn file_digest(path: &Path) -> std::io::Result<String> {
    let data = fs::read(path)?;
    Ok(Sha256::digest(&data).iter().map(|b| format!("{b:02x}")).collect())
}
