//! Two-factor model R ≈ UVᵀ with exponential priors on U and V and a Gamma
//! prior on the noise precision τ.

pub mod gibbs;
pub mod icm;
pub mod np;
pub mod vb;

use ndarray::Array2;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::hyper::{check_positive, InitScheme, Rate};
use crate::randvar::{ExpParams, GammaParams, Moments, TruncNormParams};

/// Prior hyperparameters. Defaults are unit rates and α = β = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfHyper {
    pub lambda_u: Rate,
    pub lambda_v: Rate,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for NmfHyper {
    fn default() -> Self {
        Self {
            lambda_u: Rate::Scalar(1.0),
            lambda_v: Rate::Scalar(1.0),
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl NmfHyper {
    pub fn uniform(lambda: f64, alpha: f64, beta: f64) -> Self {
        Self {
            lambda_u: Rate::Scalar(lambda),
            lambda_v: Rate::Scalar(lambda),
            alpha,
            beta,
        }
    }

    pub fn validate(&self, rows: usize, cols: usize, k: usize) -> Result<()> {
        if k == 0 {
            return Err(invalid("K must be at least 1"));
        }
        self.lambda_u.validate("lambda_u", (rows, k))?;
        self.lambda_v.validate("lambda_v", (cols, k))?;
        check_positive("alpha", self.alpha)?;
        check_positive("beta", self.beta)
    }

    pub fn tau_prior(&self) -> GammaParams {
        GammaParams {
            shape: self.alpha,
            rate: self.beta,
        }
    }
}

/// Point-valued factors and noise precision.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfPointState {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub tau: f64,
}

impl NmfPointState {
    pub fn init<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        k: usize,
        hyper: &NmfHyper,
        scheme: InitScheme,
        rng: &mut R,
    ) -> Result<Self> {
        hyper.validate(rows, cols, k)?;
        let (u, v, tau) = match scheme {
            InitScheme::PriorMean => (
                Array2::from_shape_fn((rows, k), |(i, c)| 1.0 / hyper.lambda_u.at(i, c)),
                Array2::from_shape_fn((cols, k), |(j, c)| 1.0 / hyper.lambda_v.at(j, c)),
                hyper.tau_prior().mean(),
            ),
            InitScheme::PriorDraw => {
                let u = draw_exponential(rows, k, &hyper.lambda_u, rng);
                let v = draw_exponential(cols, k, &hyper.lambda_v, rng);
                (u, v, hyper.tau_prior().sample(rng))
            }
            InitScheme::KMeans => {
                return Err(invalid("K-means initialisation is only offered for tri-factorisation"))
            }
        };
        Ok(Self { u, v, tau })
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    pub fn product(&self) -> Array2<f64> {
        self.u.dot(&self.v.t())
    }
}

pub(crate) fn draw_exponential<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rate: &Rate,
    rng: &mut R,
) -> Array2<f64> {
    let mut out = Array2::zeros((rows, cols));
    for ((r, c), x) in out.indexed_iter_mut() {
        *x = ExpParams { rate: rate.at(r, c) }.sample(rng);
    }
    out
}

/// Mean-field posterior: a truncated normal per factor entry and a Gamma for τ,
/// with moments cached next to the parameters they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfVariationalState {
    pub mu_u: Array2<f64>,
    pub prec_u: Array2<f64>,
    pub mu_v: Array2<f64>,
    pub prec_v: Array2<f64>,
    pub exp_u: Array2<f64>,
    pub var_u: Array2<f64>,
    pub exp_v: Array2<f64>,
    pub var_v: Array2<f64>,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub exp_tau: f64,
}

impl NmfVariationalState {
    /// Location parameters start at the chosen point with unit precision.
    pub fn init<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        k: usize,
        hyper: &NmfHyper,
        scheme: InitScheme,
        rng: &mut R,
    ) -> Result<Self> {
        let point = NmfPointState::init(rows, cols, k, hyper, scheme, rng)?;
        let mut state = Self {
            mu_u: point.u,
            prec_u: Array2::ones((rows, k)),
            mu_v: point.v,
            prec_v: Array2::ones((cols, k)),
            exp_u: Array2::zeros((rows, k)),
            var_u: Array2::zeros((rows, k)),
            exp_v: Array2::zeros((cols, k)),
            var_v: Array2::zeros((cols, k)),
            alpha_star: hyper.alpha,
            beta_star: hyper.alpha / point.tau,
            exp_tau: point.tau,
        };
        state.refresh_all();
        Ok(state)
    }

    pub fn k(&self) -> usize {
        self.mu_u.ncols()
    }

    pub fn u_params(&self, i: usize, k: usize) -> TruncNormParams {
        TruncNormParams {
            mu: self.mu_u[[i, k]],
            tau: self.prec_u[[i, k]],
        }
    }

    pub fn v_params(&self, j: usize, k: usize) -> TruncNormParams {
        TruncNormParams {
            mu: self.mu_v[[j, k]],
            tau: self.prec_v[[j, k]],
        }
    }

    pub(crate) fn set_u(&mut self, i: usize, k: usize, p: TruncNormParams) {
        self.mu_u[[i, k]] = p.mu;
        self.prec_u[[i, k]] = p.tau;
        let m = Moments::of(p);
        self.exp_u[[i, k]] = m.mean;
        self.var_u[[i, k]] = m.var;
    }

    pub(crate) fn set_v(&mut self, j: usize, k: usize, p: TruncNormParams) {
        self.mu_v[[j, k]] = p.mu;
        self.prec_v[[j, k]] = p.tau;
        let m = Moments::of(p);
        self.exp_v[[j, k]] = m.mean;
        self.var_v[[j, k]] = m.var;
    }

    pub(crate) fn set_tau(&mut self, q: GammaParams) {
        self.alpha_star = q.shape;
        self.beta_star = q.rate;
        self.exp_tau = q.mean();
    }

    /// Recomputes every cached moment from the stored parameters.
    pub fn refresh_all(&mut self) {
        for i in 0..self.mu_u.nrows() {
            for k in 0..self.k() {
                self.set_u(i, k, self.u_params(i, k));
            }
        }
        for j in 0..self.mu_v.nrows() {
            for k in 0..self.k() {
                self.set_v(j, k, self.v_params(j, k));
            }
        }
        self.exp_tau = self.alpha_star / self.beta_star;
    }

    pub fn exp_u_sq(&self) -> Array2<f64> {
        &self.exp_u * &self.exp_u + &self.var_u
    }

    pub fn exp_v_sq(&self) -> Array2<f64> {
        &self.exp_v * &self.exp_v + &self.var_v
    }

    pub fn tau_posterior(&self) -> GammaParams {
        GammaParams {
            shape: self.alpha_star,
            rate: self.beta_star,
        }
    }

    /// Ũ Ṽᵀ, the posterior-mean reconstruction.
    pub fn mean_product(&self) -> Array2<f64> {
        self.exp_u.dot(&self.exp_v.t())
    }
}

/// Averages U⁽ˢ⁾V⁽ˢ⁾ᵀ over retained posterior draws.
pub fn predict_draws(draws: &[NmfPointState]) -> Result<Array2<f64>> {
    let first = draws.first().ok_or(Error::NoDraws)?;
    let mut acc = first.product();
    for d in &draws[1..] {
        acc += &d.product();
    }
    acc /= draws.len() as f64;
    Ok(acc)
}

/// Row `i` of UVᵀ restricted to the observed columns.
pub(crate) fn fill_prediction(
    pred: &mut Array2<f64>,
    omega: &[(usize, usize)],
    u: &Array2<f64>,
    v: &Array2<f64>,
) {
    for &(i, j) in omega {
        pred[[i, j]] = u.row(i).dot(&v.row(j));
    }
}

pub(crate) fn masked_sse(
    data: &crate::ObservedMatrix,
    omega: &[(usize, usize)],
    pred: &Array2<f64>,
) -> f64 {
    omega
        .iter()
        .map(|&(i, j)| {
            let r = data.values()[[i, j]] - pred[[i, j]];
            r * r
        })
        .sum()
}
