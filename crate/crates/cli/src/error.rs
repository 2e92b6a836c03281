use std::path::{Path, PathBuf};

use reentrant::io::TraceFileError;
use thiserror::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_PARSE: u8 = 4;
pub const EXIT_NOT_CONVERGED: u8 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] reentrant::Error),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Parse { .. } => EXIT_PARSE,
            CliError::Model(reentrant::Error::Singular) => EXIT_NOT_CONVERGED,
            CliError::Model(_) => EXIT_CONFIG,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn trace_file(path: &Path, err: TraceFileError) -> Self {
        match err {
            TraceFileError::Io(source) => CliError::io(path, source),
            TraceFileError::Parse { .. } | TraceFileError::Invalid(_) => CliError::Parse {
                path: path.to_path_buf(),
                message: err.to_string(),
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
