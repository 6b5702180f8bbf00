use super::ExploreError;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, value: f64) -> bool {
        self.low <= value && value <= self.high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    #[default]
    Wald,
    Wilson,
}

/// Two-sided standard-normal critical value, 1.959964 at level 0.95.
pub fn z_value(level: f64) -> Result<f64, ExploreError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(ExploreError::BadLevel(level));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

fn check_counts(successes: u64, trials: u64) -> Result<(), ExploreError> {
    if trials == 0 {
        return Err(ExploreError::ZeroTrials);
    }
    if successes > trials {
        return Err(ExploreError::SuccessesExceedTrials { successes, trials });
    }
    Ok(())
}

/// Normal-approximation interval `p ± z √(p(1-p)/n)`, clamped to `[0, 1]`.
pub fn wald_ci(successes: u64, trials: u64, level: f64) -> Result<Interval, ExploreError> {
    check_counts(successes, trials)?;
    let z = z_value(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let half = z * (p * (1.0 - p) / n).sqrt();
    Ok(Interval {
        low: (p - half).max(0.0),
        high: (p + half).min(1.0),
    })
}

/// Wilson score interval.
pub fn wilson_ci(successes: u64, trials: u64, level: f64) -> Result<Interval, ExploreError> {
    check_counts(successes, trials)?;
    let z = z_value(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(Interval {
        low: (centre - half).max(0.0).min(p),
        high: (centre + half).min(1.0).max(p),
    })
}

pub fn binomial_ci(successes: u64, trials: u64, level: f64, method: CiMethod) -> Result<Interval, ExploreError> {
    match method {
        CiMethod::Wald => wald_ci(successes, trials, level),
        CiMethod::Wilson => wilson_ci(successes, trials, level),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Sample (n - 1) standard deviation; undefined for a single value.
    pub stddev: Option<f64>,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats, ExploreError> {
    if values.is_empty() {
        return Err(ExploreError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stddev = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    Ok(SummaryStats {
        count: values.len(),
        mean,
        stddev,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Pairwise Pearson coefficients. Entries involving a constant column are
/// undefined (`None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    pub fn write_csv<W: std::io::Write>(&self, output: W) -> Result<(), ExploreError> {
        let mut wtr = csv::Writer::from_writer(output);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        wtr.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut cells = vec![name.clone()];
            cells.extend(row.iter().map(|v| v.map_or(String::new(), |v| v.to_string())));
            wtr.write_record(&cells)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Correlations between the columns of `data` (rows are observations).
pub fn pearson_correlation_matrix(data: &Array2<f64>, names: &[String]) -> Result<CorrelationMatrix, ExploreError> {
    let n = data.nrows();
    if n < 2 {
        return Err(ExploreError::TooFewRows(n));
    }
    if names.len() != data.ncols() {
        return Err(ExploreError::Shape(format!("{} names for {} columns", names.len(), data.ncols())));
    }
    // Standardise each column, then average the products.
    let standardized: Vec<Option<Vec<f64>>> = data
        .axis_iter(Axis(1))
        .map(|column| {
            let mean = column.sum() / n as f64;
            let centered: Vec<f64> = column.iter().map(|v| v - mean).collect();
            let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm > 0.0 && column.iter().any(|&v| v != column[0]))
                .then(|| centered.into_iter().map(|v| v / norm).collect())
        })
        .collect();
    let p = data.ncols();
    let mut values = vec![vec![None; p]; p];
    for i in 0..p {
        for j in i..p {
            let r = match (&standardized[i], &standardized[j]) {
                (Some(_), Some(_)) if i == j => Some(1.0),
                (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)),
                _ => None,
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: names.to_vec(),
        values,
    })
}
