use super::stats::{binomial_ci, z_value, CiMethod};
use super::ExploreError;
use crate::ingest::{feature_kind, format_number, FeatureKind, FeatureValue, LabeledDataset, PolicyRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How values of a feature are grouped into levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Binning {
    /// Every distinct value is its own level (categorical or discrete numeric).
    Distinct,
    /// Half-open bins `[origin + i·width, origin + (i+1)·width)`.
    Width { width: f64, origin: f64 },
    /// Half-open bins between consecutive edges, plus open-ended outer bins.
    Edges { edges: Vec<f64> },
}

impl Binning {
    pub fn width(width: f64) -> Self {
        Binning::Width { width, origin: 0.0 }
    }

    fn validate(&self, feature: &str) -> Result<(), ExploreError> {
        match self {
            Binning::Distinct => Ok(()),
            Binning::Width { width, .. } if *width > 0.0 && width.is_finite() => Ok(()),
            Binning::Edges { edges } if !edges.is_empty() && edges.windows(2).all(|w| w[0] < w[1]) => Ok(()),
            _ => Err(ExploreError::EmptyBinSpec(feature.to_string())),
        }
    }

    /// Sort key and display label for a numeric value.
    fn bin(&self, value: f64) -> (f64, String) {
        match self {
            Binning::Distinct => (value, format_number(value)),
            Binning::Width { width, origin } => {
                let i = ((value - origin) / width).floor();
                let low = origin + i * width;
                let high = low + width;
                (low, format!("[{}, {})", trim(low), trim(high)))
            }
            Binning::Edges { edges } => {
                let pos = edges.partition_point(|e| *e <= value);
                if pos == 0 {
                    (f64::NEG_INFINITY, format!("(-inf, {})", trim(edges[0])))
                } else if pos == edges.len() {
                    (edges[pos - 1], format!("[{}, inf)", trim(edges[pos - 1])))
                } else {
                    (edges[pos - 1], format!("[{}, {})", trim(edges[pos - 1]), trim(edges[pos])))
                }
            }
        }
    }
}

fn trim(v: f64) -> String {
    format_number(v)
}

/// Secondary-driver ages are stored as 0 when there is no such driver.
fn is_absent_second_driver(policy: &PolicyRecord, feature: &str) -> bool {
    matches!(feature, "drv_age2" | "drv_age_lic2") && !policy.drv_drv2
}

/// Numerator of the claim proportion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimCounting {
    /// Policies with at least one claim; a binomial proportion.
    #[default]
    ClaimingPolicies,
    /// Total claims; a rate that may exceed 1.
    TotalClaims,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionRow {
    pub level: String,
    pub policy_count: u64,
    pub claim_count: u64,
    pub proportion: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionOptions {
    pub counting: ClaimCounting,
    pub method: CiMethod,
    pub level: f64,
}

impl Default for ProportionOptions {
    fn default() -> Self {
        ProportionOptions {
            counting: ClaimCounting::ClaimingPolicies,
            method: CiMethod::Wald,
            level: 0.95,
        }
    }
}

/// Policy count, claim count and claim proportion with a confidence interval
/// for every level of `feature`, ordered by level. Rows with a missing value
/// are skipped; empty levels never appear.
pub fn claim_proportion_by_level(
    dataset: &LabeledDataset,
    feature: &str,
    binning: &Binning,
    options: &ProportionOptions,
) -> Result<Vec<ProportionRow>, ExploreError> {
    let kind = feature_kind(feature).ok_or_else(|| ExploreError::UnknownFeature(feature.to_string()))?;
    if kind == FeatureKind::Numeric {
        binning.validate(feature)?;
    }

    // Numeric levels are keyed by an order-preserving image of their lower bound.
    let mut numeric: BTreeMap<(u64, String), (u64, u64)> = BTreeMap::new();
    let mut text: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for row in &dataset.rows {
        let claims = match options.counting {
            ClaimCounting::ClaimingPolicies => (row.claim_nb > 0) as u64,
            ClaimCounting::TotalClaims => row.claim_nb as u64,
        };
        let entry = match row.policy.feature(feature) {
            Some(FeatureValue::Number(_)) if is_absent_second_driver(&row.policy, feature) => continue,
            Some(FeatureValue::Number(v)) => {
                let (sort, label) = binning.bin(v);
                numeric.entry((order_key(sort), label)).or_default()
            }
            Some(FeatureValue::Category(token)) => text.entry(token.to_string()).or_default(),
            Some(FeatureValue::Text(value)) => text.entry(value.to_string()).or_default(),
            Some(FeatureValue::Missing) | None => continue,
        };
        entry.0 += 1;
        entry.1 += claims;
    }

    let z = z_value(options.level)?;
    let make = |level: String, policies: u64, claims: u64| -> Result<ProportionRow, ExploreError> {
        let proportion = claims as f64 / policies as f64;
        let (ci_low, ci_high) = match options.counting {
            ClaimCounting::ClaimingPolicies => {
                let ci = binomial_ci(claims, policies, options.level, options.method)?;
                (ci.low, ci.high)
            }
            ClaimCounting::TotalClaims => {
                // Poisson normal approximation for a rate.
                let half = z * (proportion / policies as f64).sqrt();
                ((proportion - half).max(0.0), proportion + half)
            }
        };
        Ok(ProportionRow { level, policy_count: policies, claim_count: claims, proportion, ci_low, ci_high })
    };

    let mut rows = Vec::new();
    for ((_, label), (policies, claims)) in numeric {
        rows.push(make(label, policies, claims)?);
    }
    for (token, (policies, claims)) in text {
        rows.push(make(token, policies, claims)?);
    }
    Ok(rows)
}

/// Maps an f64 onto a u64 with the same ordering.
fn order_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Default grouping per feature for the exploration figures.
pub fn default_binning(feature: &str) -> Binning {
    match feature {
        "drv_age1" | "drv_age2" | "vh_age" => Binning::width(5.0),
        "vh_speed" => Binning::width(25.0),
        "pol_duration" | "pol_sit_duration" => Binning::width(1.0),
        _ => Binning::Distinct,
    }
}

pub fn write_proportions_csv<W: std::io::Write>(rows: &[ProportionRow], output: W) -> Result<(), ExploreError> {
    let mut wtr = csv::Writer::from_writer(output);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}
