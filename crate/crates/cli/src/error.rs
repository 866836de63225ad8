use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config section `{section}`, key `{key}`: {reason}")]
    Config {
        section: String,
        key: String,
        reason: String,
    },
    #[error("config line {line}: {reason}")]
    ConfigLine { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] replab_core::Error),
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
