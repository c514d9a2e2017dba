//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric within {tol:e}")]
    Asymmetric { tol: f64 },

    #[error("dimension {dim} exceeds the exact-decomposition limit {max}")]
    TooLarge { dim: usize, max: usize },

    #[error(
        "enumeration needs {needed} evaluations, above the budget {budget}; \
         use the Monte Carlo estimator instead"
    )]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("no valid samples: {0}")]
    NoValidSamples(String),

    #[error("hypothesis violated: rate r = {rate} is not < 1")]
    HypothesisViolated { rate: f64 },

    #[error("trace carries no ground-truth errors")]
    MissingTruth,

    #[error("iterate diverged at iteration {iter}")]
    Diverged { iter: usize },

    #[error("unsupported model for this operation: {0}")]
    UnsupportedModel(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
