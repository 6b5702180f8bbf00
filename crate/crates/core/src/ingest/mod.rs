//! Policy and claim table ingestion.
//!
//! The policy table has one row per insured vehicle. The claim table has one
//! row per claim, keyed by client and vehicle; claims are summed per policy
//! and left-joined onto the policy table, which yields the binary
//! claim/no-claim label.

mod merge;
mod parse;
mod record;

pub use merge::*;
pub use parse::*;
pub use record::*;

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("line {line}, column {column:?}: {message}")]
    Field {
        line: u64,
        column: String,
        message: String,
    },
    #[error("line {line}: duplicate policy id {id:?}")]
    DuplicatePolicy { line: u64, id: String },
    #[error("empty {0} when building a policy key")]
    EmptyKeyComponent(&'static str),
    #[error("claims reference {} unknown policies: {}", .0.len(), preview(.0))]
    OrphanClaims(Vec<String>),
    #[error("vh_age imputation failed: {0}")]
    Imputation(String),
}

fn preview(keys: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut out = keys.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if keys.len() > SHOWN {
        out.push_str(", ...");
    }
    out
}

impl IngestError {
    pub(crate) fn from_csv(err: csv::Error) -> Self {
        let line = err.position().map_or(0, |p| p.line());
        match err.into_kind() {
            csv::ErrorKind::Io(source) => IngestError::Io {
                path: PathBuf::from("<csv>"),
                source,
            },
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => IngestError::Malformed {
                line,
                message: format!("expected {expected_len} fields, found {len}"),
            },
            other => IngestError::Malformed {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}

/// Parse both tables, aggregate, and join.
pub fn load_dataset(
    policy_csv: impl AsRef<std::path::Path>,
    claim_csv: impl AsRef<std::path::Path>,
    separator: &str,
) -> Result<LabeledDataset, IngestError> {
    let path = policy_csv.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let policies = read_policies_with(file, separator)?;
    let claims = parse_claim_csv(claim_csv)?;
    let aggregates = aggregate_claims(&claims, separator)?;
    merge(policies, &aggregates)
}
