//! Penalised logistic loss and its (sub)gradient.

use super::LogregError;
use crate::ingest::Label;
use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

/// Coefficient penalty. The intercept is never penalised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Penalty {
    None,
    /// `(λ/2) Σ |w_j|`
    Lasso,
    /// `(λ/2) Σ w_j²`
    Ridge,
    /// `(λ/2) (mix Σ |w_j| + (1 - mix) Σ w_j²)`
    ElasticNet { mix: f64 },
}

impl Penalty {
    /// Weights on the L1 and L2 sums, before the common `λ/2` factor.
    pub(crate) fn split(&self) -> (f64, f64) {
        match *self {
            Penalty::None => (0.0, 0.0),
            Penalty::Lasso => (1.0, 0.0),
            Penalty::Ridge => (0.0, 1.0),
            Penalty::ElasticNet { mix } => (mix, 1.0 - mix),
        }
    }

    pub fn validate(&self) -> Result<(), LogregError> {
        if let Penalty::ElasticNet { mix } = self {
            if !(0.0..=1.0).contains(mix) {
                return Err(LogregError::InvalidMix(*mix));
            }
        }
        Ok(())
    }

    pub fn is_smooth(&self) -> bool {
        self.split().0 == 0.0
    }
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Penalty::None => f.write_str("none"),
            Penalty::Lasso => f.write_str("lasso"),
            Penalty::Ridge => f.write_str("ridge"),
            Penalty::ElasticNet { mix } => write!(f, "elastic_net(mix={mix})"),
        }
    }
}

/// Data-fit term of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataTerm {
    /// Bernoulli negative log-likelihood, `Σ log(1 + e^{z_i}) - y_i z_i`.
    #[default]
    LogLikelihood,
    /// `½ Σ (σ(z_i) - y_i)²`, non-convex; kept for comparison only.
    SquaredError,
}

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Borrowed view of a training problem.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [f64],
    pub penalty: Penalty,
    pub lambda: f64,
    pub data_term: DataTerm,
}

pub fn targets(labels: &[Label]) -> Vec<f64> {
    labels.iter().map(|l| l.as_bit() as f64).collect()
}

impl<'a> Problem<'a> {
    pub fn new(
        x: ArrayView2<'a, f64>,
        y: &'a [f64],
        penalty: Penalty,
        lambda: f64,
        data_term: DataTerm,
    ) -> Result<Self, LogregError> {
        if x.nrows() != y.len() {
            return Err(LogregError::ShapeMismatch(format!("{} rows but {} targets", x.nrows(), y.len())));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(LogregError::InvalidLambda(lambda));
        }
        penalty.validate()?;
        Ok(Problem { x, y, penalty, lambda, data_term })
    }

    fn check_weights(&self, weights: ArrayView1<'_, f64>) -> Result<(), LogregError> {
        if weights.len() != self.x.ncols() {
            return Err(LogregError::ShapeMismatch(format!(
                "{} weights for {} columns",
                weights.len(),
                self.x.ncols()
            )));
        }
        Ok(())
    }

    pub(crate) fn scores(&self, weights: ArrayView1<'_, f64>, intercept: f64) -> Array1<f64> {
        let mut z = self.x.dot(&weights);
        z += intercept;
        z
    }

    pub(crate) fn data_loss(&self, z: &Array1<f64>) -> f64 {
        match self.data_term {
            DataTerm::LogLikelihood => z.iter().zip(self.y).map(|(&z, &y)| softplus(z) - y * z).sum(),
            DataTerm::SquaredError => {
                0.5 * z.iter().zip(self.y).map(|(&z, &y)| (sigmoid(z) - y).powi(2)).sum::<f64>()
            }
        }
    }

    /// `∂loss/∂z_i` for each row.
    pub(crate) fn residuals(&self, z: &Array1<f64>) -> Array1<f64> {
        match self.data_term {
            DataTerm::LogLikelihood => Array1::from_iter(z.iter().zip(self.y).map(|(&z, &y)| sigmoid(z) - y)),
            DataTerm::SquaredError => Array1::from_iter(z.iter().zip(self.y).map(|(&z, &y)| {
                let p = sigmoid(z);
                (p - y) * p * (1.0 - p)
            })),
        }
    }

    pub(crate) fn l1_weight(&self) -> f64 {
        0.5 * self.lambda * self.penalty.split().0
    }

    fn l2_weight(&self) -> f64 {
        0.5 * self.lambda * self.penalty.split().1
    }

    pub fn penalty_value(&self, weights: ArrayView1<'_, f64>) -> f64 {
        let l1 = self.l1_weight();
        let l2 = self.l2_weight();
        let mut total = 0.0;
        if l1 != 0.0 {
            total += l1 * weights.iter().map(|w| w.abs()).sum::<f64>();
        }
        if l2 != 0.0 {
            total += l2 * weights.iter().map(|w| w * w).sum::<f64>();
        }
        total
    }

    /// Smooth part: data term plus the L2 share of the penalty.
    pub(crate) fn smooth_value(&self, weights: ArrayView1<'_, f64>, z: &Array1<f64>) -> f64 {
        let l2 = self.l2_weight();
        let ridge = if l2 != 0.0 { l2 * weights.dot(&weights) } else { 0.0 };
        self.data_loss(z) + ridge
    }

    pub(crate) fn l1_value(&self, weights: ArrayView1<'_, f64>) -> f64 {
        let l1 = self.l1_weight();
        if l1 == 0.0 {
            0.0
        } else {
            l1 * weights.iter().map(|w| w.abs()).sum::<f64>()
        }
    }

    /// Gradient of the smooth part, given the residuals at `weights`.
    pub(crate) fn smooth_gradient(&self, weights: ArrayView1<'_, f64>, residuals: &Array1<f64>) -> (Array1<f64>, f64) {
        let mut grad = self.x.t().dot(residuals);
        let l2 = self.l2_weight();
        if l2 != 0.0 {
            grad.scaled_add(2.0 * l2, &weights);
        }
        (grad, residuals.sum())
    }

    pub fn objective(&self, weights: ArrayView1<'_, f64>, intercept: f64) -> Result<f64, LogregError> {
        self.check_weights(weights)?;
        let z = self.scores(weights, intercept);
        Ok(self.data_loss(&z) + self.penalty_value(weights))
    }

    /// Gradient with respect to the weights and the intercept. The L1 term
    /// contributes its subgradient with `sign(0) = 0`.
    pub fn gradient(&self, weights: ArrayView1<'_, f64>, intercept: f64) -> Result<(Array1<f64>, f64), LogregError> {
        self.check_weights(weights)?;
        let z = self.scores(weights, intercept);
        let (mut grad, grad_intercept) = self.smooth_gradient(weights, &self.residuals(&z));
        let l1 = self.l1_weight();
        if l1 != 0.0 {
            grad.zip_mut_with(&weights, |g, &w| {
                if w != 0.0 {
                    *g += l1 * w.signum();
                }
            });
        }
        Ok((grad, grad_intercept))
    }
}

pub fn objective(
    weights: ArrayView1<'_, f64>,
    intercept: f64,
    x: ArrayView2<'_, f64>,
    y: &[Label],
    penalty: Penalty,
    lambda: f64,
) -> Result<f64, LogregError> {
    let y = targets(y);
    let problem = Problem::new(x.view(), &y, penalty, lambda, DataTerm::LogLikelihood)?;
    problem.objective(weights, intercept)
}

pub fn gradient(
    weights: ArrayView1<'_, f64>,
    intercept: f64,
    x: ArrayView2<'_, f64>,
    y: &[Label],
    penalty: Penalty,
    lambda: f64,
) -> Result<(Array1<f64>, f64), LogregError> {
    let y = targets(y);
    let problem = Problem::new(x.view(), &y, penalty, lambda, DataTerm::LogLikelihood)?;
    problem.gradient(weights, intercept)
}
