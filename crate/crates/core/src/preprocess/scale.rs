use super::{EncodedMatrix, PreprocessError};
use ndarray::Axis;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    Zscore,
    Minmax,
}

/// Per-column affine map `x -> (x - center) / scale`.
///
/// For z-scores `center` is the mean and `scale` the population standard
/// deviation; for min-max they are the minimum and the range. Constant columns
/// pass through untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub center: f64,
    pub scale: f64,
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub kind: ScalingKind,
    pub schema_hash: String,
    pub columns: Vec<ColumnScale>,
}

pub fn fit_scaling(matrix: &EncodedMatrix, kind: ScalingKind) -> Result<ScalingParams, PreprocessError> {
    let n = matrix.nrows();
    if n < 2 {
        return Err(PreprocessError::TooFewRows(n));
    }
    let columns = matrix
        .values
        .axis_iter(Axis(1))
        .map(|column| {
            let (center, scale) = match kind {
                ScalingKind::Zscore => {
                    // Welford's running moments.
                    let (mut mean, mut m2) = (0.0, 0.0);
                    for (count, &x) in column.iter().enumerate() {
                        let delta = x - mean;
                        mean += delta / (count + 1) as f64;
                        m2 += delta * (x - mean);
                    }
                    (mean, (m2 / n as f64).sqrt())
                }
                ScalingKind::Minmax => {
                    let min = column.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (min, max - min)
                }
            };
            let first = column[0];
            let constant = column.iter().all(|&x| x == first) || scale <= f64::EPSILON * center.abs().max(1.0);
            ColumnScale { center, scale, constant }
        })
        .collect();
    Ok(ScalingParams {
        kind,
        schema_hash: matrix.schema.hash(),
        columns,
    })
}

impl ScalingParams {
    fn check(&self, matrix: &EncodedMatrix) -> Result<(), PreprocessError> {
        if matrix.ncols() != self.columns.len() || matrix.schema.hash() != self.schema_hash {
            return Err(PreprocessError::SchemaMismatch(
                "scaling parameters were fit on a different column layout".into(),
            ));
        }
        Ok(())
    }

    /// Applies the map to a single feature vector in place.
    pub fn apply_row(&self, row: &mut [f64]) {
        for (x, column) in row.iter_mut().zip(&self.columns) {
            if !column.constant {
                *x = (*x - column.center) / column.scale;
            }
        }
    }
}

pub fn apply_scaling(matrix: &EncodedMatrix, params: &ScalingParams) -> Result<EncodedMatrix, PreprocessError> {
    params.check(matrix)?;
    let mut out = matrix.clone();
    for (mut column, scale) in out.values.axis_iter_mut(Axis(1)).zip(&params.columns) {
        if !scale.constant {
            column.mapv_inplace(|x| (x - scale.center) / scale.scale);
        }
    }
    Ok(out)
}

pub fn invert_scaling(matrix: &EncodedMatrix, params: &ScalingParams) -> Result<EncodedMatrix, PreprocessError> {
    params.check(matrix)?;
    let mut out = matrix.clone();
    for (mut column, scale) in out.values.axis_iter_mut(Axis(1)).zip(&params.columns) {
        if !scale.constant {
            column.mapv_inplace(|x| x * scale.scale + scale.center);
        }
    }
    Ok(out)
}
