use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sites {first} and {second} coincide at ({x}, {y})")]
    DuplicateSites {
        first: usize,
        second: usize,
        x: f64,
        y: f64,
    },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e}): {reason}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("grid resolutions differ: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("egalitarian assumption fails for p = {p}: worst margin {margin:e}")]
    AssumptionViolated { p: f64, margin: f64 },

    #[error("quantile function decreases near probability {at}")]
    NonMonotoneQuantile { at: f64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}, row {row}: {message}")]
    BadRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the contents of an input file or sample
    /// (as opposed to bad arguments or numerical failure).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::DuplicateSites { .. }
                | Error::Degenerate(_)
                | Error::MissingColumn { .. }
                | Error::BadRow { .. }
                | Error::Csv { .. }
                | Error::Open { .. }
                | Error::Io(_)
        )
    }

    /// True for failures of an iterative or numerical procedure.
    pub fn is_numerical_error(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::AssumptionViolated { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
