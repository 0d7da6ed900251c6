use std::io;
use std::path::{Path, PathBuf};

use qal::circuit::{CircuitError, DecodeError, TextError};
use qal::host::HostError;
use thiserror::Error;

/// Anything that ends a command with exit status 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{source}")]
    Text { path: PathBuf, source: TextError },
    #[error("{path}: {source}")]
    Decode { path: PathBuf, source: DecodeError },
    #[error("{path}: {source}")]
    Circuit { path: PathBuf, source: CircuitError },
    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("{0}")]
    Host(#[from] HostError),
    #[error("{0}")]
    Command(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }
}
