//! Run manifests: the fully resolved config plus provenance of one command.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_hash: String,
    pub created_unix: u64,
    /// Worker count of the run; outputs do not depend on it.
    pub workers: Option<usize>,
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

pub fn config_hash(config: &RunConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, workers: Option<usize>) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.scenario.seed,
            config_hash: config_hash(config),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            workers,
            outputs: Vec::new(),
            config: config.clone(),
        }
    }

    /// First line of every CSV written under this manifest.
    pub fn csv_comment(&self) -> String {
        format!(
            "# manifest={MANIFEST_FILE} config_hash={}\n",
            self.config_hash
        )
    }
}
