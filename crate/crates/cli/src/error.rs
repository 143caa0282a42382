use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    /// 2 for bad arguments, 3 for unreadable or invalid data, 4 for
    /// numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io { .. } | CliError::Json { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<vlorenz::Error> for CliError {
    fn from(e: vlorenz::Error) -> Self {
        if e.is_numerical_error() {
            CliError::Numerical(e.to_string())
        } else if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
