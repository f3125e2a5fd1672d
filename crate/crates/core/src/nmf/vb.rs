//! Mean-field variational Bayes for R ≈ UVᵀ.

use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gibbs::tau_from_sse;
use super::{NmfHyper, NmfVariationalState};
use crate::conditional::tn_from_sums;
use crate::config::RunConfig;
use crate::error::Result;
use crate::observed::{build_index_sets, IndexSets, ObservedMatrix};
use crate::quality::elbo_nmf;
use crate::randvar::exp_matched_tn;
use crate::trace::{Clock, RunTrace};

/// E_q[(R_ij − U_i·V_j)²] under the factorised posterior.
pub fn expected_sq_residual(data: &ObservedMatrix, q: &NmfVariationalState, i: usize, j: usize) -> f64 {
    entry_expected_sq(data.values()[[i, j]], q, i, j)
}

fn entry_expected_sq(r: f64, q: &NmfVariationalState, i: usize, j: usize) -> f64 {
    let mut mean = 0.0;
    let mut var = 0.0;
    for k in 0..q.k() {
        let (mu, mv) = (q.exp_u[[i, k]], q.exp_v[[j, k]]);
        let (su, sv) = (mu * mu + q.var_u[[i, k]], mv * mv + q.var_v[[j, k]]);
        mean += mu * mv;
        var += su * sv - mu * mu * mv * mv;
    }
    (r - mean).powi(2) + var
}

/// Σ_Ω E_q[(R_ij − U_i·V_j)²].
pub fn total_expected_sq_residual(data: &ObservedMatrix, q: &NmfVariationalState) -> f64 {
    data.observed().map(|(i, j, r)| entry_expected_sq(r, q, i, j)).sum()
}

/// Second-moment and linear sums for one factor entry; `w`/`w_var` are column
/// `k` of the opposite factor's means and variances.
fn line_sums(
    r: ArrayView1<f64>,
    pred: ArrayView1<f64>,
    idx: &[usize],
    x: f64,
    w: &Array2<f64>,
    w_var: &Array2<f64>,
    k: usize,
) -> (f64, f64) {
    let mut sq = 0.0;
    let mut lin = 0.0;
    for &j in idx {
        let m = w[[j, k]];
        sq += m * m + w_var[[j, k]];
        lin += (r[j] - pred[j] + x * m) * m;
    }
    (sq, lin)
}

pub(crate) struct Updater<'a> {
    data: &'a ObservedMatrix,
    sets: IndexSets,
    hyper: &'a NmfHyper,
    /// Ũ Ṽᵀ on Ω.
    pred: Array2<f64>,
}

impl<'a> Updater<'a> {
    pub fn new(data: &'a ObservedMatrix, hyper: &'a NmfHyper) -> Self {
        Self {
            data,
            sets: build_index_sets(data),
            hyper,
            pred: Array2::zeros(data.dim()),
        }
    }

    fn refresh(&mut self, q: &NmfVariationalState) {
        super::fill_prediction(&mut self.pred, &self.sets.omega, &q.exp_u, &q.exp_v);
    }

    pub fn sweep(&mut self, q: &mut NmfVariationalState) {
        self.refresh(q);
        let r = self.data.values();
        let tau = q.exp_tau;
        for i in 0..q.mu_u.nrows() {
            for k in 0..q.k() {
                let cols = &self.sets.omega_row[i];
                let old = q.exp_u[[i, k]];
                let (sq, lin) = line_sums(r.row(i), self.pred.row(i), cols, old, &q.exp_v, &q.var_v, k);
                let lambda = self.hyper.lambda_u.at(i, k);
                q.set_u(i, k, tn_from_sums(tau, lambda, sq, lin).unwrap_or_else(|| exp_matched_tn(lambda)));
                let d = q.exp_u[[i, k]] - old;
                for &j in cols {
                    self.pred[[i, j]] += d * q.exp_v[[j, k]];
                }
            }
        }
        for j in 0..q.mu_v.nrows() {
            for k in 0..q.k() {
                let rows = &self.sets.omega_col[j];
                let old = q.exp_v[[j, k]];
                let (sq, lin) = line_sums(r.column(j), self.pred.column(j), rows, old, &q.exp_u, &q.var_u, k);
                let lambda = self.hyper.lambda_v.at(j, k);
                q.set_v(j, k, tn_from_sums(tau, lambda, sq, lin).unwrap_or_else(|| exp_matched_tn(lambda)));
                let d = q.exp_v[[j, k]] - old;
                for &i in rows {
                    self.pred[[i, j]] += d * q.exp_u[[i, k]];
                }
            }
        }
        let esr = total_expected_sq_residual(self.data, q);
        q.set_tau(tau_from_sse(self.hyper.alpha, self.hyper.beta, self.sets.len(), esr));
    }

    pub fn mse(&mut self, q: &NmfVariationalState) -> f64 {
        self.refresh(q);
        super::masked_sse(self.data, &self.sets.omega, &self.pred) / self.sets.len() as f64
    }
}

/// One full coordinate-ascent sweep: U row-major, then V, then τ.
pub fn sweep(data: &ObservedMatrix, q: &mut NmfVariationalState, hyper: &NmfHyper) {
    Updater::new(data, hyper).sweep(q);
}

#[derive(Debug, Clone)]
pub struct VbRun {
    pub trace: RunTrace,
    pub state: NmfVariationalState,
}

/// Sweeps until the iteration cap or until the relative ELBO gain drops below `config.tol`.
pub fn run(data: &ObservedMatrix, hyper: &NmfHyper, k: usize, config: &RunConfig) -> Result<VbRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut q = NmfVariationalState::init(data.rows(), data.cols(), k, hyper, config.init, &mut rng)?;
    let mut upd = Updater::new(data, hyper);
    let mut trace = RunTrace::new("vb", config.seed, true);
    let mut prev = elbo_nmf(data, hyper, &q);
    let clock = Clock::start();
    for t in 1..=config.iterations {
        upd.sweep(&mut q);
        let elbo = elbo_nmf(data, hyper, &q);
        trace.record(t, upd.mse(&q), Some(elbo), &clock);
        if config.converged(prev, elbo) {
            break;
        }
        prev = elbo;
    }
    Ok(VbRun { trace, state: q })
}
