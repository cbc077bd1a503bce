//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the estimators, samplers, and file loaders.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A partition failed a structural invariant (overlap, missing coverage,
    /// mismatched dimensions, weights not summing to one).
    #[error("invalid partition: {0}")]
    PartitionInvalid(String),

    /// A finite sample source was exhausted before the requested draws
    /// completed. `samples_drawn` counts the draws that did succeed.
    #[error("sample budget exhausted after {samples_drawn} draws")]
    BudgetExhausted { samples_drawn: usize },

    /// Rejection sampling hit its draw cap without a single acceptance.
    /// `rate_bound` is an upper confidence bound (rule of three) on the
    /// acceptance rate consistent with that outcome.
    #[error("no acceptance in {draws} draws; cell mass is below {rate_bound:.2e} at 95% confidence")]
    LowMassCell { draws: usize, rate_bound: f64 },

    /// A graph failed a structural requirement (self-loop, duplicate edge,
    /// disconnected, too large for exhaustive search).
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// A line-oriented input file failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn partition(message: impl Into<String>) -> Self {
        Error::PartitionInvalid(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
