//! Binary logistic regression with optional L1, L2 or elastic-net penalties.

mod fit;
mod objective;

pub use fit::*;
pub use objective::*;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogregError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("elastic-net mix must lie in [0, 1], got {0}")]
    InvalidMix(f64),
    #[error("C must be positive, got {0}")]
    InvalidC(f64),
    #[error("C values must be sorted ascending")]
    UnsortedPath,
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("invalid optimiser settings: {0}")]
    InvalidConfig(String),
}
