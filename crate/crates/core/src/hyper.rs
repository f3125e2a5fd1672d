use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Exponential prior rates for one factor matrix: one value broadcast to
/// every entry, or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Scalar(f64),
    Matrix(Array2<f64>),
}

impl Rate {
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        match self {
            Rate::Scalar(v) => *v,
            Rate::Matrix(m) => m[[r, c]],
        }
    }

    pub(crate) fn validate(&self, what: &str, shape: (usize, usize)) -> Result<()> {
        match self {
            Rate::Scalar(v) => check_positive(what, *v),
            Rate::Matrix(m) => {
                if m.dim() != shape {
                    return Err(Error::Shape(format!(
                        "{what} rates have shape {:?}, expected {shape:?}",
                        m.dim()
                    )));
                }
                m.iter().try_for_each(|&v| check_positive(what, v))
            }
        }
    }
}

impl Default for Rate {
    fn default() -> Self {
        Rate::Scalar(1.0)
    }
}

pub(crate) fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

/// How engines pick their starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Every entry at the mean of its prior.
    PriorMean,
    /// Every entry drawn from its prior.
    #[default]
    PriorDraw,
    /// Row/column K-means indicators (tri-factorisation only).
    KMeans,
}

impl std::str::FromStr for InitScheme {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "prior_mean" | "mean" => Ok(InitScheme::PriorMean),
            "prior_draw" | "random" => Ok(InitScheme::PriorDraw),
            "kmeans" | "k_means" => Ok(InitScheme::KMeans),
            _ => Err(invalid(format!("unknown init scheme {s:?}; expected prior_mean, prior_draw or kmeans"))),
        }
    }
}

/// Smoothing added to K-means indicators for point-valued states.
pub const KMEANS_SMOOTHING: f64 = 0.2;
