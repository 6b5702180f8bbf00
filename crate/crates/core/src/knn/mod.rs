//! Exact k-nearest-neighbour classification.

mod distance;
mod model;

pub use distance::*;
pub use model::*;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KnnError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Minkowski order must be a finite number >= 1, got {0}")]
    InvalidOrder(f64),
    #[error("k = {k} is invalid for {n} training rows")]
    InvalidK { k: usize, n: usize },
    #[error("training set is empty")]
    EmptyTraining,
    #[error("no k values to sweep")]
    EmptyKValues,
    #[error("no query rows")]
    EmptyQueries,
    #[error("training matrix contains non-finite values")]
    NonFinite,
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}
