//! Crate-wide error type and result alias.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("degenerate bounds: lo ({lo}) must be strictly less than hi ({hi})")]
    DegenerateBounds { lo: f64, hi: f64 },

    #[error("value {value} lies outside the declared bounds [{lo}, {hi}]")]
    OutOfBounds { value: f64, lo: f64, hi: f64 },

    #[error("sample count must be at least 1")]
    NonPositiveN,

    #[error("invalid privacy parameters: {0}")]
    InvalidPrivacyParams(String),

    #[error("epsilon {0} is outside (0, 1), the validity range of the closed-form sigma")]
    EpsilonOutOfRange(f64),

    #[error("polynomial order {k_order} exceeds the supported maximum {max}")]
    KTooLarge { k_order: usize, max: usize },

    #[error("CDF estimates must share an identical evaluation grid")]
    GridMismatch,

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("moment vectors have mismatched polynomial order")]
    MismatchedOrder,

    #[error("no site contributions to aggregate")]
    EmptyContributionList,

    #[error("CDF is constant and cannot be inverted for resampling")]
    DegenerateCdf,

    #[error("invalid experiment config: {0}")]
    ConfigInvalid(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
