use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch { context: &'static str, expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("image ids are not aligned (row {row}: `{left}` vs `{right}`)")]
    MisalignedIds { row: usize, left: String, right: String },

    #[error("concept index {index} out of range for a vocabulary of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("vector `{name}` has norm {norm:.6}, too far from unit length to renormalize")]
    Normalization { name: String, norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("zero embedding cannot be decomposed")]
    ZeroEmbedding,

    #[error("sparse decomposition did not converge after {sweeps} sweeps (KKT violation {violation:e})")]
    NonConvergence { sweeps: usize, violation: f64 },

    #[error("array `{name}`: expected {expected} bytes, file has {actual}")]
    SizeMismatch { name: String, expected: u64, actual: u64 },

    #[error("array `{name}`: sha256 mismatch")]
    Checksum { name: String },

    #[error("bundle manifest: {0}")]
    Manifest(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable short code for reporting, one per failure class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::DuplicateId(_) => "duplicate-id",
            Error::EmptyInput(_) => "empty-input",
            Error::MisalignedIds { .. } => "misaligned-ids",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::Normalization { .. } => "normalization",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Precondition(_) => "precondition",
            Error::ZeroEmbedding => "zero-embedding",
            Error::NonConvergence { .. } => "non-convergence",
            Error::SizeMismatch { .. } => "size-mismatch",
            Error::Checksum { .. } => "checksum",
            Error::Manifest(_) => "manifest",
            Error::Unknown { .. } => "unknown-name",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) fn ensure_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, actual })
    }
}
