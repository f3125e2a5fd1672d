//! Synthetic data and the experiment protocols built on it.

mod protocols;

pub use protocols::{
    convergence_experiment, cross_validation, missing_values_experiment, noise_experiment, ConditionResult,
    CvReport, ExperimentReport, FoldResult, Protocol, RepeatResult,
};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{Factors, Rank};
use crate::error::{invalid, Result};
use crate::observed::ObservedMatrix;

/// Shape and noise of a synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: Rank,
    pub noise: Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// Absolute noise variance.
    Variance(f64),
    /// Noise variance as a multiple of the empirical variance of the noiseless product.
    SignalRatio(f64),
}

impl ToySpec {
    /// I = 100, J = 80 with unit-variance noise.
    pub fn standard(rank: Rank) -> Self {
        Self {
            rows: 100,
            cols: 80,
            rank,
            noise: Noise::Variance(1.0),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Toy> {
        let (n, m) = (self.rows, self.cols);
        let (k, l) = match self.rank {
            Rank::Nmf { k } => (k, 0),
            Rank::Nmtf { k, l } => (k, l),
        };
        if n == 0 || m == 0 || k == 0 || matches!(self.rank, Rank::Nmtf { .. }) && l == 0 {
            return Err(invalid("toy data dimensions must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut exp = |r: usize, c: usize| Array2::from_shape_simple_fn((r, c), || Exp1.sample(&mut rng));
        let truth = match self.rank {
            Rank::Nmf { k } => {
                let u = exp(n, k);
                let v = exp(m, k);
                Factors::Nmf { u, v }
            }
            Rank::Nmtf { k, l } => {
                let f = exp(n, k);
                let s = exp(k, l);
                let g = exp(m, l);
                Factors::Nmtf { f, s, g }
            }
        };
        let clean = truth.product();
        let noise_var = match self.noise {
            Noise::Variance(v) => v,
            Noise::SignalRatio(r) => r * variance(clean.iter().copied()),
        };
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(invalid(format!("noise variance must be non-negative, got {noise_var}")));
        }
        let sd = noise_var.sqrt();
        let values = clean.mapv(|x| {
            let z: f64 = rng.sample(StandardNormal);
            x + sd * z
        });
        Ok(Toy {
            data: ObservedMatrix::fully_observed(values)?,
            truth,
            noise_var,
        })
    }
}

/// A generated dataset with its ground-truth factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Toy {
    pub data: ObservedMatrix,
    pub truth: Factors,
    pub noise_var: f64,
}

pub(crate) fn variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Unit-mean exponential factors plus Gaussian noise of variance `noise_var`.
pub fn gen_toy_nmf(rows: usize, cols: usize, k: usize, noise_var: f64, seed: u64) -> Result<Toy> {
    ToySpec {
        rows,
        cols,
        rank: Rank::Nmf { k },
        noise: Noise::Variance(noise_var),
    }
    .generate(seed)
}

pub fn gen_toy_nmtf(rows: usize, cols: usize, k: usize, l: usize, noise_var: f64, seed: u64) -> Result<Toy> {
    ToySpec {
        rows,
        cols,
        rank: Rank::Nmtf { k, l },
        noise: Noise::Variance(noise_var),
    }
    .generate(seed)
}
