use std::path::{Path, PathBuf};

use risae_core::attack::AttackError;
use risae_core::autoencoder::AutoencoderError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config at `{path}`: {reason}")]
    Config { path: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {} not found; run `train` first or pass --checkpoint", path.display())]
    MissingCheckpoint { path: PathBuf },
    #[error("malformed {what} file {}: {reason}", path.display())]
    Format {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },
    #[error(transparent)]
    Autoencoder(#[from] AutoencoderError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

impl HarnessError {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(what: &'static str, path: &Path, reason: impl Into<String>) -> Self {
        Self::Format {
            what,
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for anything
    /// touching files, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } => 2,
            Self::Io { .. } | Self::MissingCheckpoint { .. } | Self::Format { .. } => 3,
            Self::Autoencoder(_) | Self::Attack(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}
