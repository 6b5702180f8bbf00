//! Claim/no-claim classification for motor third-party-liability portfolios.
//!
//! The crate covers the whole pipeline: reading the policy and claim tables
//! ([`ingest`]), building a scaled design matrix ([`preprocess`]), two
//! classifiers ([`knn`] and [`logreg`]), evaluation ([`eval`]) and exploratory
//! statistics with SVG figures ([`explore`]).

pub mod eval;
pub mod explore;
pub mod ingest;
pub mod knn;
pub mod logreg;
pub mod preprocess;
