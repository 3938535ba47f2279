//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension mismatch between an input and what a layer or operation expects.
    #[error("shape error: {0}")]
    Shape(String),

    /// A forward/backward pass produced a non-finite value.
    #[error("non-finite value in {what}{}", sample.map(|i| format!(" (sample {i})")).unwrap_or_default())]
    NonFinite { what: String, sample: Option<usize> },

    /// Malformed IDX payload, with the byte offset where parsing failed.
    #[error("idx format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Invalid argument or configuration value.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Training loss became non-finite.
    #[error("training diverged after epoch {last_finite_epoch}")]
    Divergence { last_finite_epoch: usize },

    /// Dense Hessian requested above the configured parameter cap.
    #[error("dense path refused: {params} parameters exceeds cap {cap}; use the matrix-free Lanczos path")]
    DenseCap { params: usize, cap: usize },

    /// Eigensolver failed to converge or broke down irrecoverably.
    #[error("eigensolver error: {0}")]
    Eigensolver(String),

    /// A metric is undefined for the given inputs (e.g. V(k) with no positive eigenvalues).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Operation does not support the requested mode (e.g. Fisher split under cross-entropy).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Linear system could not be solved.
    #[error("singular system: {0}")]
    Singular(String),

    /// Config file parse error.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
