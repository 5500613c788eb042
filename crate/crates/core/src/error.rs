//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two inputs that must agree in shape did not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A dense decomposition or linear solve failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The ADMM iteration produced a non-finite value.
    #[error("divergence at iteration {iter}: {variable} became non-finite")]
    Diverged { variable: String, iter: usize },

    /// A referenced file could not be read or written.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A data file did not parse as the documented format.
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A label file contained a value outside [0, clusters).
    #[error("label out of range: {0}")]
    LabelOutOfRange(String),
}

impl Error {
    /// Wraps an io error with the path it concerned.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
