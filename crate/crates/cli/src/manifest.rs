//! Run manifests written next to every output set.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: Vec<String>,
    /// SHA-256 of the canonical TOML form of the resolved configuration.
    pub config_digest: String,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

pub fn digest(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunManifest {
    pub fn new(
        command: &[String],
        canonical_config: &str,
        seed: u64,
        outputs: &[PathBuf],
        wall: Duration,
    ) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_vec(),
            config_digest: digest(canonical_config),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: outputs
                .iter()
                .map(|p| {
                    p.file_name().map_or_else(
                        || p.display().to_string(),
                        |n| n.to_string_lossy().into_owned(),
                    )
                })
                .collect(),
            wall_time_s: wall.as_secs_f64(),
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
