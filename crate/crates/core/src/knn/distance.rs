use super::KnnError;
use serde::{Deserialize, Serialize};

/// Distance used to rank neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceMetric {
    /// `(sum |x_i - y_i|^order)^(1/order)`; `order` must be at least 1.
    Minkowski { order: f64 },
    /// `max |x_i - y_i|`, the limit of Minkowski as the order grows.
    Chebyshev,
}

impl DistanceMetric {
    pub const EUCLIDEAN: DistanceMetric = DistanceMetric::Minkowski { order: 2.0 };
    pub const MANHATTAN: DistanceMetric = DistanceMetric::Minkowski { order: 1.0 };

    pub fn minkowski(order: f64) -> Result<Self, KnnError> {
        check_order(order)?;
        Ok(DistanceMetric::Minkowski { order })
    }

    pub fn validate(&self) -> Result<(), KnnError> {
        match self {
            DistanceMetric::Minkowski { order } => check_order(*order),
            DistanceMetric::Chebyshev => Ok(()),
        }
    }

    /// Distance between equal-length slices. Lengths are the caller's problem.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            DistanceMetric::Minkowski { order } if order == 1.0 => {
                x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
            }
            DistanceMetric::Minkowski { order } if order == 2.0 => x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let d = a - b;
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            DistanceMetric::Minkowski { order } => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs().powf(order))
                .sum::<f64>()
                .powf(order.recip()),
            DistanceMetric::Chebyshev => x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64, KnnError> {
        self.validate()?;
        check_lengths(x, y)?;
        Ok(self.eval(x, y))
    }
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistanceMetric::Minkowski { order } => write!(f, "minkowski(p={order})"),
            DistanceMetric::Chebyshev => f.write_str("chebyshev"),
        }
    }
}

fn check_order(order: f64) -> Result<(), KnnError> {
    // Below 1 the triangle inequality fails.
    if order.is_finite() && order >= 1.0 {
        Ok(())
    } else {
        Err(KnnError::InvalidOrder(order))
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<(), KnnError> {
    if x.len() != y.len() {
        return Err(KnnError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

pub fn minkowski_distance(x: &[f64], y: &[f64], order: f64) -> Result<f64, KnnError> {
    DistanceMetric::minkowski(order)?.distance(x, y)
}

pub fn chebyshev_distance(x: &[f64], y: &[f64]) -> Result<f64, KnnError> {
    DistanceMetric::Chebyshev.distance(x, y)
}
