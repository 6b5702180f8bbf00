//! Claim aggregation, the policy/claim join, and vehicle-age imputation.

use super::parse::build_policy_id_with;
use super::record::*;
use super::IngestError;
use std::collections::{BTreeMap, HashMap, HashSet};

/// Claim experience summed over one policy key.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClaimTotals {
    pub claim_nb: u32,
    pub claim_amount: f64,
}

/// Sums claim counts and amounts per policy key.
///
/// Amounts for a key are summed in sorted order so the result does not depend
/// on the order of the input rows.
pub fn aggregate_claims(
    claims: &[ClaimRecord],
    separator: &str,
) -> Result<BTreeMap<String, ClaimTotals>, IngestError> {
    let mut grouped: BTreeMap<String, (u32, Vec<f64>)> = BTreeMap::new();
    for claim in claims {
        let key = build_policy_id_with(&claim.id_client, &claim.id_vehicle, separator)?;
        let entry = grouped.entry(key).or_default();
        entry.0 += claim.claim_nb;
        entry.1.push(claim.claim_amount);
    }
    Ok(grouped
        .into_iter()
        .map(|(key, (claim_nb, mut amounts))| {
            amounts.sort_by(f64::total_cmp);
            let claim_amount = amounts.iter().sum();
            (key, ClaimTotals { claim_nb, claim_amount })
        })
        .collect())
}

/// Left-joins aggregated claims onto the policy table. Policies without
/// claims get zero totals and [`Label::NoClaim`]; claim keys that match no
/// policy are reported as an error.
pub fn merge(
    policies: Vec<PolicyRecord>,
    aggregates: &BTreeMap<String, ClaimTotals>,
) -> Result<LabeledDataset, IngestError> {
    let known: HashSet<&str> = policies.iter().map(|p| p.id_policy.as_str()).collect();
    let orphans: Vec<String> = aggregates
        .keys()
        .filter(|key| !known.contains(key.as_str()))
        .cloned()
        .collect();
    if !orphans.is_empty() {
        return Err(IngestError::OrphanClaims(orphans));
    }

    let rows = policies
        .into_iter()
        .map(|policy| {
            let totals = aggregates.get(&policy.id_policy).copied().unwrap_or_default();
            LabeledRow {
                label: Label::from_claim_count(totals.claim_nb),
                claim_nb: totals.claim_nb,
                claim_amount: totals.claim_amount,
                policy,
            }
        })
        .collect();
    Ok(LabeledDataset { rows })
}

/// How to fill missing vehicle ages.
#[derive(Debug, Clone, PartialEq)]
pub enum ImputeStrategy {
    /// Values looked up elsewhere, keyed by policy id.
    ExternalValue(Vec<(String, u32)>),
    /// Median of the ages present, rounded to the nearest year.
    Median,
    /// Remove rows with a missing age.
    Drop,
}

pub fn impute_vh_age(
    mut dataset: LabeledDataset,
    strategy: &ImputeStrategy,
) -> Result<LabeledDataset, IngestError> {
    match strategy {
        ImputeStrategy::Drop => {
            dataset.rows.retain(|row| row.policy.vh_age.is_some());
        }
        ImputeStrategy::Median => {
            let mut present: Vec<u32> = dataset.rows.iter().filter_map(|r| r.policy.vh_age).collect();
            if present.len() == dataset.rows.len() {
                return Ok(dataset);
            }
            if present.is_empty() {
                return Err(IngestError::Imputation("no vh_age values to take a median of".into()));
            }
            present.sort_unstable();
            let mid = present.len() / 2;
            let median = if present.len() % 2 == 1 {
                present[mid] as f64
            } else {
                (present[mid - 1] as f64 + present[mid] as f64) / 2.0
            };
            let fill = median.round() as u32;
            for row in &mut dataset.rows {
                row.policy.vh_age.get_or_insert(fill);
            }
        }
        ImputeStrategy::ExternalValue(pairs) => {
            if pairs.is_empty() {
                return Err(IngestError::Imputation(
                    "external_value strategy needs at least one (policy, vh_age) pair".into(),
                ));
            }
            let lookup: HashMap<&str, u32> = pairs.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            let mut unresolved = Vec::new();
            for row in &mut dataset.rows {
                if row.policy.vh_age.is_none() {
                    match lookup.get(row.policy.id_policy.as_str()) {
                        Some(value) => row.policy.vh_age = Some(*value),
                        None => unresolved.push(row.policy.id_policy.clone()),
                    }
                }
            }
            if !unresolved.is_empty() {
                return Err(IngestError::Imputation(format!(
                    "no external vh_age supplied for {}",
                    unresolved.join(", ")
                )));
            }
        }
    }
    Ok(dataset)
}

/// Number of policies per aggregate claim count.
pub fn claim_frequency_histogram(dataset: &LabeledDataset) -> BTreeMap<u32, usize> {
    let mut histogram = BTreeMap::new();
    for row in &dataset.rows {
        *histogram.entry(row.claim_nb).or_insert(0) += 1;
    }
    histogram
}
