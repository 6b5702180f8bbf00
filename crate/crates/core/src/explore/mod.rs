//! Exploratory statistics and SVG figures.

mod choropleth;
mod department;
mod proportion;
mod stats;
pub mod svg;

pub use choropleth::*;
pub use department::*;
pub use proportion::*;
pub use stats::*;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("numeric feature `{0}` needs a non-empty, increasing bin specification")]
    EmptyBinSpec(String),
    #[error("confidence interval needs at least one trial")]
    ZeroTrials,
    #[error("{successes} successes exceed {trials} trials")]
    SuccessesExceedTrials { successes: u64, trials: u64 },
    #[error("confidence level {0} is outside (0, 1)")]
    BadLevel(f64),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no values")]
    Empty,
    #[error("INSEE code `{0}` is not 5 characters")]
    BadInsee(String),
    #[error("malformed GeoJSON: {0}")]
    GeoJson(String),
    #[error("unknown value field `{0}` (expected policy_count, claim_count or claim_amount)")]
    UnknownValueField(String),
    #[error("nothing to plot: {0}")]
    EmptySeries(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
