use super::stats::{summary_stats, SummaryStats};
use super::ExploreError;
use crate::ingest::LabeledDataset;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Department of a municipality: the first two characters of its INSEE code.
pub fn department_code(insee: &str) -> Result<String, ExploreError> {
    if insee.chars().count() != 5 {
        return Err(ExploreError::BadInsee(insee.to_string()));
    }
    Ok(insee.chars().take(2).collect::<String>().to_uppercase())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepartmentAggregate {
    pub code: String,
    pub policy_count: u64,
    /// Total claims, not claiming policies.
    pub claim_count: u64,
    pub claim_amount: f64,
}

/// One aggregate per department present, ordered by code.
pub fn aggregate_by_department(dataset: &LabeledDataset) -> Result<Vec<DepartmentAggregate>, ExploreError> {
    if dataset.rows.is_empty() {
        return Err(ExploreError::Empty);
    }
    let mut groups: BTreeMap<String, (u64, u64, Vec<f64>)> = BTreeMap::new();
    for row in &dataset.rows {
        let code = department_code(&row.policy.pol_insee_code)?;
        let entry = groups.entry(code).or_default();
        entry.0 += 1;
        entry.1 += row.claim_nb as u64;
        if row.claim_amount != 0.0 {
            entry.2.push(row.claim_amount);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(code, (policy_count, claim_count, mut amounts))| {
            amounts.sort_by(f64::total_cmp);
            DepartmentAggregate { code, policy_count, claim_count, claim_amount: amounts.iter().sum() }
        })
        .collect())
}

/// Which aggregate column a figure or summary refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueField {
    PolicyCount,
    ClaimCount,
    ClaimAmount,
}

impl ValueField {
    pub const ALL: [ValueField; 3] = [ValueField::PolicyCount, ValueField::ClaimCount, ValueField::ClaimAmount];

    pub fn name(self) -> &'static str {
        match self {
            ValueField::PolicyCount => "policy_count",
            ValueField::ClaimCount => "claim_count",
            ValueField::ClaimAmount => "claim_amount",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ExploreError> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| ExploreError::UnknownValueField(name.to_string()))
    }

    pub fn get(self, aggregate: &DepartmentAggregate) -> f64 {
        match self {
            ValueField::PolicyCount => aggregate.policy_count as f64,
            ValueField::ClaimCount => aggregate.claim_count as f64,
            ValueField::ClaimAmount => aggregate.claim_amount,
        }
    }
}

/// Distribution of each aggregate column across departments.
pub fn department_summary(aggregates: &[DepartmentAggregate]) -> Result<Vec<(ValueField, SummaryStats)>, ExploreError> {
    ValueField::ALL
        .into_iter()
        .map(|field| {
            let values: Vec<f64> = aggregates.iter().map(|a| field.get(a)).collect();
            Ok((field, summary_stats(&values)?))
        })
        .collect()
}

pub fn write_department_csv<W: std::io::Write>(aggregates: &[DepartmentAggregate], output: W) -> Result<(), ExploreError> {
    let mut wtr = csv::Writer::from_writer(output);
    for aggregate in aggregates {
        wtr.serialize(aggregate)?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row per aggregate column with count, mean, std, min, quartiles and max.
/// An undefined standard deviation is written as an empty cell.
pub fn write_summary_csv<W: std::io::Write>(
    summary: &[(ValueField, SummaryStats)],
    output: W,
) -> Result<(), ExploreError> {
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record(["variable", "count", "mean", "std", "min", "25%", "50%", "75%", "max"])?;
    for (field, s) in summary {
        let cells = [
            field.name().to_string(),
            s.count.to_string(),
            format!("{:.2}", s.mean),
            s.stddev.map_or(String::new(), |v| format!("{v:.2}")),
            format!("{:.2}", s.min),
            format!("{:.2}", s.q1),
            format!("{:.2}", s.median),
            format!("{:.2}", s.q3),
            format!("{:.2}", s.max),
        ];
        wtr.write_record(&cells)?;
    }
    wtr.flush()?;
    Ok(())
}
