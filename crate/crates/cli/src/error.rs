use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config line {line}: {message}")]
    ConfigLine { line: usize, message: String },
    #[error("numerical failure: {0}")]
    Numerical(#[from] multibaker::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for usage/config errors, 3 for numerical failures, 1 for IO.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::ConfigLine { .. } => 2,
            Self::Numerical(_) => 3,
            Self::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
