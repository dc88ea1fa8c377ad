use thiserror::Error;

/// Errors produced by the solver, the networks, the trainers and the data loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: String, right: String },

    #[error("invalid cost at ({row}, {col}): {value}")]
    InvalidCost { row: usize, col: usize, value: f64 },

    #[error("unsupported metric {0:?} for this operation")]
    UnsupportedMetric(crate::ot::CostMetric),

    #[error("assignment of size {size} exceeds the dense limit of {limit}")]
    PoolTooLarge { size: usize, limit: usize },

    #[error("invalid point set: {0}")]
    InvalidPoints(String),

    #[error("invalid layer specification: {0}")]
    SpecError(String),

    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("non-finite values in {0}")]
    NonFiniteOutput(String),

    #[error("at least {needed} points required, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid count: {0}")]
    InvalidCount(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { found: u32, expected: u32 },

    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("cluster model error: {0}")]
    ModelError(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn size(left: impl Into<String>, right: impl Into<String>) -> Self {
        Error::SizeMismatch {
            left: left.into(),
            right: right.into(),
        }
    }

    /// True for errors caused by malformed or missing input data rather than by
    /// numerical failure or programmer misuse.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::BadMagic { .. }
                | Error::TruncatedFile { .. }
                | Error::CountMismatch { .. }
                | Error::InvalidPoints(_)
                | Error::Format(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }

    /// True for errors caused by numerical breakdown during training or sampling.
    pub fn is_numeric_error(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteGradient { .. }
                | Error::NonFiniteOutput(_)
                | Error::InvalidCost { .. }
                | Error::ModelError(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
