use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("validation failed for bank `{bank_id}`: {message}")]
    Validation { bank_id: String, message: String },

    #[error("duplicate bank_id `{0}`")]
    DuplicateBank(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("all interbank totals are zero; nothing to reconstruct")]
    NoInterbankVolume,

    #[error("infeasible density: target of {target:.3} links is not below the supremum of {supremum} linkable pairs")]
    InfeasibleDensity { target: f64, supremum: usize },

    #[error("network {member}: bank `{bank_id}` left without a required link after {attempts} resamples")]
    Unreachable {
        member: usize,
        bank_id: String,
        attempts: usize,
    },

    #[error("unknown asset class `{0}`")]
    UnknownAssetClass(String),

    #[error("empty sample set")]
    EmptySample,

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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
