use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cdfnet::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error("invalid config: {0}")]
    Config(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 usage, 2 validation or input problems, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Core(cdfnet::Error::NonFinite(_) | cdfnet::Error::Invariant(_)) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
