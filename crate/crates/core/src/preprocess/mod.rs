//! From a labelled policy table to a scaled numeric design matrix.

mod encode;
mod scale;
mod split;

pub use encode::*;
pub use scale::*;
pub use split::*;

use crate::ingest::LabeledDataset;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("feature {0:?} is not categorical")]
    NotCategorical(String),
    #[error("feature {0:?} is not numeric")]
    NotNumeric(String),
    #[error("category {category:?} of {feature:?} was not seen when the schema was fit")]
    UnseenCategory { feature: String, category: String },
    #[error("row {row}: missing value for {feature:?}")]
    MissingValue { row: usize, feature: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("matrix contains non-finite values")]
    NonFinite,
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("test fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
}

/// Settings for [`prepare`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareOptions {
    pub encode: EncodeOptions,
    pub scaling: ScalingKind,
    /// Fit the scaler on the training rows only. Off by default, which fits
    /// on every row before splitting.
    pub fit_on_train: bool,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            encode: EncodeOptions::default(),
            scaling: ScalingKind::Zscore,
            fit_on_train: false,
            test_fraction: 0.25,
            seed: 0,
        }
    }
}

/// Encoded, scaled matrix plus everything needed to reproduce it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub matrix: EncodedMatrix,
    pub scaling: ScalingParams,
    pub split: SplitIndices,
}

impl Prepared {
    pub fn train(&self) -> EncodedMatrix {
        self.matrix.select_rows(&self.split.train)
    }

    pub fn test(&self) -> EncodedMatrix {
        self.matrix.select_rows(&self.split.test)
    }
}

/// Encode, split, and scale a dataset.
pub fn prepare(dataset: &LabeledDataset, options: &PrepareOptions) -> Result<Prepared, PreprocessError> {
    let schema = FeatureSchema::fit(dataset, &options.encode)?;
    prepare_with_schema(dataset, schema, options)
}

/// As [`prepare`], but with a frozen column layout.
pub fn prepare_with_schema(
    dataset: &LabeledDataset,
    schema: FeatureSchema,
    options: &PrepareOptions,
) -> Result<Prepared, PreprocessError> {
    let raw = schema.transform(dataset)?;
    let split = train_test_split(raw.nrows(), options.test_fraction, options.seed)?;
    let scaling = if options.fit_on_train {
        fit_scaling(&raw.select_rows(&split.train), options.scaling)?
    } else {
        fit_scaling(&raw, options.scaling)?
    };
    let matrix = apply_scaling(&raw, &scaling)?;
    Ok(Prepared { matrix, scaling, split })
}
