//! Metadata block attached to every output file.

use std::path::{Path, PathBuf};

use anyhow::Context;
use routing_aos::encoder::FORMAT_VERSION;
use routing_aos::rng::PRNG_ID;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ARTIFACT: &str = "routing-aos";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub artifact: String,
    pub artifact_version: String,
    pub checkpoint_format: u32,
    pub command: String,
    /// SHA-256 of `config`.
    pub config_hash: String,
    pub master_seed: u64,
    pub prng: String,
    /// The resolved configuration, TOML text.
    pub config: String,
}

impl Metadata {
    pub fn new(command: &str, master_seed: u64, config: String) -> Self {
        let config_hash = Sha256::digest(config.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Metadata {
            artifact: ARTIFACT.into(),
            artifact_version: ARTIFACT_VERSION.into(),
            checkpoint_format: FORMAT_VERSION,
            command: command.into(),
            config_hash,
            master_seed,
            prng: PRNG_ID.into(),
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes")
    }

    /// Writes `<path>.meta.json` next to an output whose format has no room
    /// for a header.
    pub fn write_sidecar(&self, path: &Path) -> anyhow::Result<PathBuf> {
        let side = sidecar_path(path);
        std::fs::write(&side, self.to_json() + "\n").with_context(|| format!("writing {}", side.display()))?;
        Ok(side)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn version_line() -> String {
    format!("{ARTIFACT} {ARTIFACT_VERSION} (checkpoint format {FORMAT_VERSION})")
}
