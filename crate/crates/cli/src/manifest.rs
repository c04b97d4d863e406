//! Run manifests written beside every artifact directory.
//!
//! A manifest records what produced the artifacts: the seed, the hash of the
//! effective configuration, and tool/format versions. It deliberately holds
//! nothing volatile (no timestamps, hostnames, or absolute paths) so that
//! identical runs write byte-identical manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{CliError, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool: String,
    pub tool_version: String,
    /// Subcommand that produced the artifacts.
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the canonical serialized effective config.
    pub config_hash: String,
    /// Inputs the command consumed, as data-root-relative paths.
    pub inputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig, mut inputs: Vec<String>) -> Self {
        inputs.sort();
        RunManifest {
            manifest_version: MANIFEST_VERSION,
            tool: "wavex".to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            inputs,
        }
    }

    /// Writes `manifest.json` into `dir`, creating the directory if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::data(format!("serialize manifest: {e}")))?;
        std::fs::write(&path, text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("bad manifest {}: {e}", path.display())))
    }
}
