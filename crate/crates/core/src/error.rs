use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = NagcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NagcError {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("preprocessing failed: {0}")]
    Preprocessing(String),

    /// A factor picked up NaN or an infinity. `iteration` is 1-based.
    #[error("non-finite entry in factor {factor} at iteration {iteration}")]
    NumericFailure { iteration: usize, factor: &'static str },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl NagcError {
    pub(crate) fn dims(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        NagcError::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
