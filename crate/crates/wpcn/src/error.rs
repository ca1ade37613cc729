use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Everything that can stop a command. [`CliError::exit_code`] maps each
/// variant to the process status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    ReadInput { path: PathBuf, source: io::Error },
    #[error("malformed {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("scenario {index}: {source}")]
    Scenario {
        index: usize,
        source: wpcn_core::Error,
    },
    #[error(transparent)]
    Model(#[from] wpcn_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot encode output: {0}")]
    Encode(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ReadInput { .. } | CliError::Parse { .. } | CliError::Usage(_) | CliError::Scenario { .. } => 2,
            CliError::Model(wpcn_core::Error::InvalidConfig(_)) => 2,
            CliError::Model(_) | CliError::Write { .. } | CliError::Encode(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
