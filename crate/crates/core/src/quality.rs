//! Fit-quality measures and the objective functions the engines monitor.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hyper::Rate;
use crate::nmf::{NmfHyper, NmfPointState, NmfVariationalState};
use crate::nmtf::{NmtfHyper, NmtfPointState, NmtfVariationalState};
use crate::observed::ObservedMatrix;
use crate::randvar::{tn_entropy, ExpParams, GammaParams, TruncNormParams};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Mean squared error of `pred` over the entries selected by `subset`.
pub fn mse(pred: &Array2<f64>, data: &ObservedMatrix, subset: &Array2<bool>) -> Result<f64> {
    check_subset(pred, data, subset)?;
    let mut sse = 0.0;
    let mut n = 0usize;
    for ((idx, &keep), &r) in subset.indexed_iter().zip(data.values().iter()) {
        if keep {
            sse += (r - pred[idx]).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptySplit("evaluation"));
    }
    Ok(sse / n as f64)
}

fn check_subset(pred: &Array2<f64>, data: &ObservedMatrix, subset: &Array2<bool>) -> Result<()> {
    if pred.dim() != data.dim() || subset.dim() != data.dim() {
        return Err(Error::Shape(format!(
            "prediction {:?} and subset {:?} must match data {:?}",
            pred.dim(),
            subset.dim(),
            data.dim()
        )));
    }
    if subset.iter().zip(data.mask().iter()).any(|(&s, &m)| s && !m) {
        return Err(invalid("evaluation subset includes unobserved entries"));
    }
    Ok(())
}

/// Σ_subset ln N(R_ij | pred_ij, 1/τ).
pub fn log_likelihood(pred: &Array2<f64>, tau: f64, data: &ObservedMatrix, subset: &Array2<bool>) -> f64 {
    let mut sse = 0.0;
    let mut n = 0usize;
    for ((idx, &keep), &r) in subset.indexed_iter().zip(data.values().iter()) {
        if keep {
            sse += (r - pred[idx]).powi(2);
            n += 1;
        }
    }
    gaussian_log_lik(n, sse, tau)
}

fn gaussian_log_lik(n: usize, sse: f64, tau: f64) -> f64 {
    0.5 * n as f64 * (tau.ln() - LN_2PI) - 0.5 * tau * sse
}

/// Factorisation shape, for counting parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelDims {
    Nmf { rows: usize, cols: usize, k: usize },
    Nmtf { rows: usize, cols: usize, k: usize, l: usize },
}

impl ModelDims {
    pub fn rows(&self) -> usize {
        match *self {
            ModelDims::Nmf { rows, .. } | ModelDims::Nmtf { rows, .. } => rows,
        }
    }

    pub fn cols(&self) -> usize {
        match *self {
            ModelDims::Nmf { cols, .. } | ModelDims::Nmtf { cols, .. } => cols,
        }
    }

    /// (K, L), with L = 0 for two-factor models.
    pub fn ranks(&self) -> (usize, usize) {
        match *self {
            ModelDims::Nmf { k, .. } => (k, 0),
            ModelDims::Nmtf { k, l, .. } => (k, l),
        }
    }
}

/// IK + JK for NMF, IK + KL + JL for NMTF.
pub fn free_params(dims: ModelDims) -> usize {
    match dims {
        ModelDims::Nmf { rows, cols, k } => rows * k + cols * k,
        ModelDims::Nmtf { rows, cols, k, l } => rows * k + k * l + cols * l,
    }
}

pub fn aic(loglik: f64, k_free: usize) -> f64 {
    2.0 * k_free as f64 - 2.0 * loglik
}

/// k·ln(n) − 2·loglik with n the number of observations.
pub fn bic(loglik: f64, k_free: usize, n_obs: usize) -> f64 {
    k_free as f64 * (n_obs as f64).ln() - 2.0 * loglik
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mse: f64,
    pub loglik: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elbo: Option<f64>,
    pub aic: f64,
    pub bic: f64,
    pub k_free: usize,
}

impl QualityReport {
    /// Scores a prediction and noise precision on the observed entries of `data`.
    pub fn evaluate(
        pred: &Array2<f64>,
        tau: f64,
        data: &ObservedMatrix,
        dims: ModelDims,
        elbo: Option<f64>,
    ) -> Result<Self> {
        let mse = mse(pred, data, data.mask())?;
        let loglik = log_likelihood(pred, tau, data, data.mask());
        let k_free = free_params(dims);
        Ok(Self {
            mse,
            loglik,
            elbo,
            aic: aic(loglik, k_free),
            bic: bic(loglik, k_free, data.n_observed()),
            k_free,
        })
    }
}

/// Terms of the ELBO that involve only τ: E[ln p(D | θ)], E[ln p(τ)] and H[q(τ)].
fn elbo_noise_terms(n_obs: usize, expected_sse: f64, alpha: f64, beta: f64, q_tau: GammaParams) -> f64 {
    let e_ln = q_tau.mean_ln();
    let e_tau = q_tau.mean();
    let lik = 0.5 * n_obs as f64 * (e_ln - LN_2PI) - 0.5 * e_tau * expected_sse;
    let prior = alpha * beta.ln() - statrs::function::gamma::ln_gamma(alpha) + (alpha - 1.0) * e_ln - beta * e_tau;
    lik + prior + q_tau.entropy()
}

/// E_q[ln p(X)] + H[q(X)] summed over a factor matrix with exponential priors.
fn elbo_factor_terms(exp: &Array2<f64>, mu: &Array2<f64>, prec: &Array2<f64>, rate: &Rate) -> f64 {
    let mut total = 0.0;
    for ((idx, &m), (&loc, &p)) in exp.indexed_iter().zip(mu.iter().zip(prec.iter())) {
        let lambda = rate.at(idx.0, idx.1);
        total += lambda.ln() - lambda * m + tn_entropy(TruncNormParams { mu: loc, tau: p });
    }
    total
}

pub fn elbo_nmf(data: &ObservedMatrix, hyper: &NmfHyper, q: &NmfVariationalState) -> f64 {
    let esr = crate::nmf::vb::total_expected_sq_residual(data, q);
    elbo_noise_terms(data.n_observed(), esr, hyper.alpha, hyper.beta, q.tau_posterior())
        + elbo_factor_terms(&q.exp_u, &q.mu_u, &q.prec_u, &hyper.lambda_u)
        + elbo_factor_terms(&q.exp_v, &q.mu_v, &q.prec_v, &hyper.lambda_v)
}

pub fn elbo_nmtf(data: &ObservedMatrix, hyper: &NmtfHyper, q: &NmtfVariationalState) -> f64 {
    let esr = crate::nmtf::vb::total_expected_sq_residual(data, q);
    elbo_noise_terms(data.n_observed(), esr, hyper.alpha, hyper.beta, q.tau_posterior())
        + elbo_factor_terms(&q.exp_f, &q.mu_f, &q.prec_f, &hyper.lambda_f)
        + elbo_factor_terms(&q.exp_s, &q.mu_s, &q.prec_s, &hyper.lambda_s)
        + elbo_factor_terms(&q.exp_g, &q.mu_g, &q.prec_g, &hyper.lambda_g)
}

fn log_prior_factor(x: &Array2<f64>, rate: &Rate) -> f64 {
    x.indexed_iter()
        .map(|((r, c), &v)| ExpParams { rate: rate.at(r, c) }.ln_pdf(v))
        .sum()
}

fn sse_on_omega(data: &ObservedMatrix, pred: &Array2<f64>) -> f64 {
    data.observed().map(|(i, j, r)| (r - pred[[i, j]]).powi(2)).sum()
}

/// ln p(R, U, V, τ): likelihood on Ω plus all prior densities.
pub fn log_posterior_nmf(data: &ObservedMatrix, hyper: &NmfHyper, s: &NmfPointState) -> f64 {
    gaussian_log_lik(data.n_observed(), sse_on_omega(data, &s.product()), s.tau)
        + log_prior_factor(&s.u, &hyper.lambda_u)
        + log_prior_factor(&s.v, &hyper.lambda_v)
        + hyper.tau_prior().ln_pdf(s.tau)
}

/// ln p(R, F, S, G, τ).
pub fn log_posterior_nmtf(data: &ObservedMatrix, hyper: &NmtfHyper, s: &NmtfPointState) -> f64 {
    gaussian_log_lik(data.n_observed(), sse_on_omega(data, &s.product()), s.tau)
        + log_prior_factor(&s.f, &hyper.lambda_f)
        + log_prior_factor(&s.s, &hyper.lambda_s)
        + log_prior_factor(&s.g, &hyper.lambda_g)
        + hyper.tau_prior().ln_pdf(s.tau)
}
