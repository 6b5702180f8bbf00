use super::objective::{sigmoid, targets, DataTerm, Penalty, Problem};
use super::LogregError;
use crate::ingest::Label;
use crate::preprocess::{EncodedMatrix, FeatureSchema};
use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Step-size rule for the descent loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRate {
    Fixed(f64),
    Backtracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop once the relative objective change falls below this.
    pub tolerance: f64,
    /// Stop once the (proximal) gradient norm falls below this.
    pub gradient_tolerance: f64,
    pub learning_rate: LearningRate,
    pub data_term: DataTerm,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 5_000,
            tolerance: 1e-8,
            gradient_tolerance: 1e-6,
            learning_rate: LearningRate::Backtracking,
            data_term: DataTerm::LogLikelihood,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<(), LogregError> {
        if self.max_iterations == 0 {
            return Err(LogregError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) || !(self.gradient_tolerance >= 0.0) {
            return Err(LogregError::InvalidConfig("tolerances must be positive".into()));
        }
        if let LearningRate::Fixed(rate) = self.learning_rate {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(LogregError::InvalidConfig(format!("learning rate {rate} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
}

/// Why the optimiser stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ObjectiveTolerance,
    GradientTolerance,
    MaxIterations,
    /// Line search could not find a decrease.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregModel {
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub penalty: Penalty,
    pub lambda: f64,
    pub schema: FeatureSchema,
    pub trace: Vec<TracePoint>,
    pub stop_reason: StopReason,
    pub gradient_norm: f64,
}

impl LogregModel {
    /// `C = 1/λ`.
    pub fn c(&self) -> f64 {
        self.lambda.recip()
    }

    fn check_dim(&self, found: usize) -> Result<(), LogregError> {
        if found != self.weights.len() {
            return Err(LogregError::ShapeMismatch(format!(
                "model has {} weights, input has {} columns",
                self.weights.len(),
                found
            )));
        }
        Ok(())
    }

    /// `w₀ + Σ w_j x_j`.
    pub fn linear_score(&self, x: &[f64]) -> Result<f64, LogregError> {
        self.check_dim(x.len())?;
        Ok(self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>, LogregError> {
        self.check_dim(x.ncols())?;
        let z = x.dot(&self.weights);
        Ok(z.iter().map(|&z| sigmoid(z + self.intercept)).collect())
    }

    /// Label 1 whenever the probability reaches `threshold`.
    pub fn predict_with_threshold(&self, x: &Array2<f64>, threshold: f64) -> Result<Vec<Label>, LogregError> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| if p >= threshold { Label::Claim } else { Label::NoClaim })
            .collect())
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<Label>, LogregError> {
        self.predict_with_threshold(x, 0.5)
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Norm of the proximal gradient mapping at unit step; the plain gradient
/// norm when there is no L1 share.
fn mapped_gradient_norm(w: &Array1<f64>, grad_w: &Array1<f64>, grad_b: f64, l1: f64) -> f64 {
    let mut sq = grad_b * grad_b;
    for (&wj, &gj) in w.iter().zip(grad_w) {
        let mapped = if l1 == 0.0 { gj } else { wj - soft_threshold(wj - gj, l1) };
        sq += mapped * mapped;
    }
    sq.sqrt()
}

/// Coefficients this close to zero after an L1 fit are set to exactly zero.
pub const SNAP_TO_ZERO: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-30;

fn validate_inputs(x: ArrayView2<'_, f64>, labels: &[Label]) -> Result<(), LogregError> {
    if x.nrows() != labels.len() {
        return Err(LogregError::ShapeMismatch(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    if x.nrows() < 2 {
        return Err(LogregError::TooFewRows(x.nrows()));
    }
    if labels.iter().all(|l| *l == labels[0]) {
        return Err(LogregError::SingleClass);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LogregError::NonFinite);
    }
    Ok(())
}

/// Fits a penalised logistic regression by full-batch descent from zero.
///
/// Smooth penalties take gradient steps with an Armijo backtracking search.
/// When an L1 share is present the step is proximal: a gradient step on the
/// smooth part followed by soft-thresholding, with the standard quadratic
/// upper-bound test for the step size. Either way every accepted step lowers
/// the objective, so the trace is non-increasing.
pub fn fit(
    x: &Array2<f64>,
    labels: &[Label],
    schema: &FeatureSchema,
    penalty: Penalty,
    lambda: f64,
    config: &FitConfig,
) -> Result<LogregModel, LogregError> {
    config.validate()?;
    validate_inputs(x.view(), labels)?;
    if schema.len() != x.ncols() {
        return Err(LogregError::ShapeMismatch(format!(
            "schema has {} columns, matrix has {}",
            schema.len(),
            x.ncols()
        )));
    }
    let y = targets(labels);
    let problem = Problem::new(x.view(), &y, penalty, lambda, config.data_term)?;
    let l1 = problem.l1_weight();

    let p = x.ncols();
    let mut w = Array1::<f64>::zeros(p);
    let mut b = 0.0;
    let mut z = problem.scores(w.view(), b);
    let mut smooth = problem.smooth_value(w.view(), &z);
    let mut total = smooth + problem.l1_value(w.view());
    let mut trace = vec![TracePoint { iteration: 0, objective: total }];
    let mut step: f64 = 1.0;
    let mut stop_reason = StopReason::MaxIterations;
    let mut gradient_norm;

    let mut iteration = 0;
    loop {
        let (grad_w, grad_b) = problem.smooth_gradient(w.view(), &problem.residuals(&z));

        gradient_norm = mapped_gradient_norm(&w, &grad_w, grad_b, l1);
        if gradient_norm < config.gradient_tolerance {
            stop_reason = StopReason::GradientTolerance;
            break;
        }
        if iteration >= config.max_iterations {
            break;
        }
        iteration += 1;

        let grad_sq = grad_w.dot(&grad_w) + grad_b * grad_b;
        let mut t = match config.learning_rate {
            LearningRate::Fixed(rate) => rate,
            LearningRate::Backtracking => (step * 2.0).min(1e6),
        };
        let accepted = loop {
            let w_new: Array1<f64> = if l1 == 0.0 {
                &w - &(&grad_w * t)
            } else {
                Array1::from_iter(
                    w.iter()
                        .zip(&grad_w)
                        .map(|(&wj, &gj)| soft_threshold(wj - t * gj, t * l1)),
                )
            };
            let b_new = b - t * grad_b;
            let z_new = problem.scores(w_new.view(), b_new);
            let smooth_new = problem.smooth_value(w_new.view(), &z_new);
            let total_new = smooth_new + problem.l1_value(w_new.view());

            if let LearningRate::Fixed(_) = config.learning_rate {
                break Some((w_new, b_new, z_new, smooth_new, total_new));
            }
            let sufficient = if l1 == 0.0 {
                smooth_new <= smooth - ARMIJO * t * grad_sq
            } else {
                let dw = &w_new - &w;
                let db = b_new - b;
                let model = smooth + grad_w.dot(&dw) + grad_b * db + (dw.dot(&dw) + db * db) / (2.0 * t);
                smooth_new <= model && total_new <= total
            };
            if sufficient && total_new.is_finite() {
                break Some((w_new, b_new, z_new, smooth_new, total_new));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };

        let Some((w_new, b_new, z_new, smooth_new, total_new)) = accepted else {
            stop_reason = StopReason::Stalled;
            break;
        };
        step = t;
        let change = (total - total_new).abs();
        w = w_new;
        b = b_new;
        z = z_new;
        smooth = smooth_new;
        let previous = total;
        total = total_new;
        trace.push(TracePoint { iteration, objective: total });
        if change <= config.tolerance * previous.abs() {
            stop_reason = StopReason::ObjectiveTolerance;
            break;
        }
    }

    if stop_reason != StopReason::GradientTolerance {
        let (grad_w, grad_b) = problem.smooth_gradient(w.view(), &problem.residuals(&z));
        gradient_norm = mapped_gradient_norm(&w, &grad_w, grad_b, l1);
    }
    if l1 != 0.0 {
        w.mapv_inplace(|v| if v.abs() < SNAP_TO_ZERO { 0.0 } else { v });
    }

    Ok(LogregModel {
        weights: w,
        intercept: b,
        penalty,
        lambda,
        schema: schema.clone(),
        trace,
        stop_reason,
        gradient_norm,
    })
}

/// Convenience wrapper taking an encoded matrix.
pub fn fit_matrix(
    matrix: &EncodedMatrix,
    penalty: Penalty,
    lambda: f64,
    config: &FitConfig,
) -> Result<LogregModel, LogregError> {
    fit(&matrix.values, &matrix.labels, &matrix.schema, penalty, lambda, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub c: f64,
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// One independent fit per `C`, with `λ = 1/C`. Fits run in parallel; each
/// starts from zero so the result does not depend on scheduling.
pub fn regularization_path(
    matrix: &EncodedMatrix,
    penalty: Penalty,
    c_values: &[f64],
    config: &FitConfig,
) -> Result<Vec<PathPoint>, LogregError> {
    if c_values.is_empty() {
        return Err(LogregError::InvalidC(f64::NAN));
    }
    if let Some(&bad) = c_values.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(LogregError::InvalidC(bad));
    }
    if c_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(LogregError::UnsortedPath);
    }
    c_values
        .par_iter()
        .map(|&c| {
            let model = fit_matrix(matrix, penalty, c.recip(), config)?;
            Ok(PathPoint {
                c,
                lambda: model.lambda,
                weights: model.weights.to_vec(),
                intercept: model.intercept,
            })
        })
        .collect()
}
