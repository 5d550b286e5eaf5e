use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("prior has zero total mass")]
    ZeroMass,

    #[error("prior is not exactly representable: {0}")]
    NotExactlyRepresentable(&'static str),

    #[error("evidence has probability zero under the prior: {0}")]
    ImpossibleEvidence(String),

    #[error("quadrature tolerance {tol:e} not met (estimate {estimate:e} after {panels} panels)")]
    ToleranceNotMet { tol: f64, estimate: f64, panels: usize },

    #[error("limit exceeded: {0}")]
    LimitExceeded(String),

    #[error("no trials survived conditioning ({total} drawn)")]
    NoConditionedTrials { total: u64 },

    #[error("unsupported prior for {operation}: {prior}")]
    UnsupportedPrior { operation: &'static str, prior: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
