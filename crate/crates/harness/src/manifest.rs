//! Run manifests: the resolved config plus content hashes of the checkpoint
//! and of every output, enough to rerun a sweep and check the result.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checkpoint::sha256_hex;
use crate::config::ExperimentConfig;
use crate::error::{self, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: sha256_hex(&error::read(path)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub checkpoint: FileDigest,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, checkpoint: FileDigest) -> Self {
        Self {
            tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            command: command.to_string(),
            config: config.clone(),
            checkpoint,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        error::write(path, text)
    }

    /// Reads a manifest and re-validates the config it carries.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = error::read(path)?;
        let m: Manifest = serde_json::from_slice(&bytes)
            .map_err(|e| HarnessError::format("manifest", path, e.to_string()))?;
        m.config.validate()?;
        Ok(m)
    }

    /// Fails unless the checkpoint bytes hash to the recorded digest.
    pub fn verify_checkpoint(&self, actual_sha256: &str, path: &Path) -> Result<()> {
        if actual_sha256 != self.checkpoint.sha256 {
            return Err(HarnessError::format(
                "checkpoint",
                path,
                format!(
                    "content hash {actual_sha256} differs from the manifest's {}",
                    self.checkpoint.sha256
                ),
            ));
        }
        Ok(())
    }
}
