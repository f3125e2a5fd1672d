//! Mean-field variational Bayes for R ≈ FSGᵀ.
//!
//! Under q the entries of F, S and G are independent, but the terms of Σ_kl
//! F_ik S_kl G_jl are not: two terms sharing F_ik (or G_jl) covary. The
//! expected squared residual and the coordinate updates carry these
//! covariance corrections, which keeps every update an exact coordinate-ascent
//! step on the ELBO.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fill_prediction, Factor, NmtfHyper, NmtfVariationalState};
use crate::conditional::tn_from_sums;
use crate::config::RunConfig;
use crate::error::Result;
use crate::nmf::gibbs::tau_from_sse;
use crate::nmf::masked_sse;
use crate::observed::{build_index_sets, IndexSets, ObservedMatrix};
use crate::quality::elbo_nmtf;
use crate::randvar::exp_matched_tn;
use crate::trace::{Clock, RunTrace};

fn second(m: &Array2<f64>, v: &Array2<f64>) -> Array2<f64> {
    m * m + v
}

/// E_q[(R_ij − F_i·S·G_j)²].
pub fn expected_sq_residual(data: &ObservedMatrix, q: &NmtfVariationalState, i: usize, j: usize) -> f64 {
    let b = q.exp_f.dot(&q.exp_s);
    let a = q.exp_s.dot(&q.exp_g.t());
    entry_expected_sq(data.values()[[i, j]], q, &b, &a, i, j)
}

/// Σ_Ω E_q[(R_ij − F_i·S·G_j)²].
pub fn total_expected_sq_residual(data: &ObservedMatrix, q: &NmtfVariationalState) -> f64 {
    let b = q.exp_f.dot(&q.exp_s);
    let a = q.exp_s.dot(&q.exp_g.t());
    data.observed()
        .map(|(i, j, r)| entry_expected_sq(r, q, &b, &a, i, j))
        .sum()
}

/// `b` = F̃S̃ and `a` = S̃G̃ᵀ.
fn entry_expected_sq(
    r: f64,
    q: &NmtfVariationalState,
    b: &Array2<f64>,
    a: &Array2<f64>,
    i: usize,
    j: usize,
) -> f64 {
    let (k_dim, l_dim) = q.ranks();
    let mean = b.row(i).dot(&q.exp_g.row(j));
    let mut var = 0.0;
    // Terms sharing G_jl.
    for l in 0..l_dim {
        let g = q.exp_g[[j, l]];
        let sg = g * g + q.var_g[[j, l]];
        let mut own_sq = 0.0;
        for k in 0..k_dim {
            let (f, s) = (q.exp_f[[i, k]], q.exp_s[[k, l]]);
            let sf = f * f + q.var_f[[i, k]];
            let ss = s * s + q.var_s[[k, l]];
            var += sf * ss * sg - (f * s * g).powi(2);
            own_sq += (f * s).powi(2);
        }
        var += q.var_g[[j, l]] * (b[[i, l]].powi(2) - own_sq);
    }
    // Terms sharing F_ik.
    for k in 0..k_dim {
        let own_sq: f64 = (0..l_dim).map(|l| (q.exp_s[[k, l]] * q.exp_g[[j, l]]).powi(2)).sum();
        var += q.var_f[[i, k]] * (a[[k, j]].powi(2) - own_sq);
    }
    (r - mean).powi(2) + var
}

pub(crate) struct Updater<'a> {
    data: &'a ObservedMatrix,
    sets: IndexSets,
    hyper: &'a NmtfHyper,
    /// F̃S̃G̃ᵀ on Ω.
    pred: Array2<f64>,
}

impl<'a> Updater<'a> {
    pub fn new(data: &'a ObservedMatrix, hyper: &'a NmtfHyper) -> Self {
        Self {
            data,
            sets: build_index_sets(data),
            hyper,
            pred: Array2::zeros(data.dim()),
        }
    }

    pub fn refresh(&mut self, q: &NmtfVariationalState) {
        fill_prediction(&mut self.pred, &self.sets.omega, &q.exp_f.dot(&q.exp_s), &q.exp_g);
    }

    pub fn sweep(&mut self, q: &mut NmtfVariationalState) {
        self.refresh(q);
        self.f_pass(q);
        self.s_pass(q);
        self.g_pass(q);
        self.tau_step(q);
    }

    pub fn f_pass(&mut self, q: &mut NmtfVariationalState) {
        let (k_dim, l_dim) = q.ranks();
        let r = self.data.values();
        let tau = q.exp_tau;
        // a_t[j, k] = (S̃G̃ᵀ)_kj and its variance Σ_l Var(S_kl G_jl).
        let a_t = q.exp_g.dot(&q.exp_s.t());
        let a_var = second(&q.exp_g, &q.var_g).dot(&second(&q.exp_s, &q.var_s).t())
            - (&q.exp_g * &q.exp_g).dot(&(&q.exp_s * &q.exp_s).t());
        let mut b = q.exp_f.dot(&q.exp_s);
        for i in 0..q.exp_f.nrows() {
            let cols = &self.sets.omega_row[i];
            for k in 0..k_dim {
                let old = q.exp_f[[i, k]];
                let mut sq = 0.0;
                let mut lin = 0.0;
                for &j in cols {
                    let a = a_t[[j, k]];
                    sq += a * a + a_var[[j, k]];
                    lin += (r[[i, j]] - self.pred[[i, j]] + old * a) * a;
                    for l in 0..l_dim {
                        let s = q.exp_s[[k, l]];
                        lin -= s * q.var_g[[j, l]] * (b[[i, l]] - old * s);
                    }
                }
                let lambda = self.hyper.lambda_f.at(i, k);
                let p = tn_from_sums(tau, lambda, sq, lin).unwrap_or_else(|| exp_matched_tn(lambda));
                q.set(Factor::F, i, k, p);
                let d = q.exp_f[[i, k]] - old;
                for &j in cols {
                    self.pred[[i, j]] += d * a_t[[j, k]];
                }
                for l in 0..l_dim {
                    b[[i, l]] += d * q.exp_s[[k, l]];
                }
            }
        }
    }

    pub fn s_pass(&mut self, q: &mut NmtfVariationalState) {
        let (k_dim, l_dim) = q.ranks();
        let r = self.data.values();
        let tau = q.exp_tau;
        let mut b = q.exp_f.dot(&q.exp_s);
        let mut a = q.exp_s.dot(&q.exp_g.t());
        let sf = second(&q.exp_f, &q.var_f);
        let sg = second(&q.exp_g, &q.var_g);
        for k in 0..k_dim {
            for l in 0..l_dim {
                let old = q.exp_s[[k, l]];
                let mut sq = 0.0;
                let mut lin = 0.0;
                for &(i, j) in &self.sets.omega {
                    let (f, g) = (q.exp_f[[i, k]], q.exp_g[[j, l]]);
                    let c = f * g;
                    sq += sf[[i, k]] * sg[[j, l]];
                    lin += (r[[i, j]] - self.pred[[i, j]] + old * c) * c
                        - f * q.var_g[[j, l]] * (b[[i, l]] - f * old)
                        - q.var_f[[i, k]] * g * (a[[k, j]] - old * g);
                }
                let lambda = self.hyper.lambda_s.at(k, l);
                let p = tn_from_sums(tau, lambda, sq, lin).unwrap_or_else(|| exp_matched_tn(lambda));
                q.set(Factor::S, k, l, p);
                let d = q.exp_s[[k, l]] - old;
                for &(i, j) in &self.sets.omega {
                    self.pred[[i, j]] += d * q.exp_f[[i, k]] * q.exp_g[[j, l]];
                }
                for i in 0..q.exp_f.nrows() {
                    b[[i, l]] += d * q.exp_f[[i, k]];
                }
                for j in 0..q.exp_g.nrows() {
                    a[[k, j]] += d * q.exp_g[[j, l]];
                }
            }
        }
    }

    pub fn g_pass(&mut self, q: &mut NmtfVariationalState) {
        let (k_dim, l_dim) = q.ranks();
        let r = self.data.values();
        let tau = q.exp_tau;
        let b = q.exp_f.dot(&q.exp_s);
        let b_var = second(&q.exp_f, &q.var_f).dot(&second(&q.exp_s, &q.var_s))
            - (&q.exp_f * &q.exp_f).dot(&(&q.exp_s * &q.exp_s));
        let mut a = q.exp_s.dot(&q.exp_g.t());
        for j in 0..q.exp_g.nrows() {
            let rows = &self.sets.omega_col[j];
            for l in 0..l_dim {
                let old = q.exp_g[[j, l]];
                let mut sq = 0.0;
                let mut lin = 0.0;
                for &i in rows {
                    let bb = b[[i, l]];
                    sq += bb * bb + b_var[[i, l]];
                    lin += (r[[i, j]] - self.pred[[i, j]] + old * bb) * bb;
                    for k in 0..k_dim {
                        let s = q.exp_s[[k, l]];
                        lin -= s * q.var_f[[i, k]] * (a[[k, j]] - s * old);
                    }
                }
                let lambda = self.hyper.lambda_g.at(j, l);
                let p = tn_from_sums(tau, lambda, sq, lin).unwrap_or_else(|| exp_matched_tn(lambda));
                q.set(Factor::G, j, l, p);
                let d = q.exp_g[[j, l]] - old;
                for &i in rows {
                    self.pred[[i, j]] += d * b[[i, l]];
                }
                for k in 0..k_dim {
                    a[[k, j]] += d * q.exp_s[[k, l]];
                }
            }
        }
    }

    pub fn tau_step(&mut self, q: &mut NmtfVariationalState) {
        let esr = total_expected_sq_residual(self.data, q);
        q.set_tau(tau_from_sse(self.hyper.alpha, self.hyper.beta, self.sets.len(), esr));
    }

    pub fn mse(&mut self, q: &NmtfVariationalState) -> f64 {
        self.refresh(q);
        masked_sse(self.data, &self.sets.omega, &self.pred) / self.sets.len() as f64
    }
}

/// One coordinate-ascent sweep: F, S, G (each row-major), then τ.
pub fn sweep(data: &ObservedMatrix, q: &mut NmtfVariationalState, hyper: &NmtfHyper) {
    Updater::new(data, hyper).sweep(q);
}

#[derive(Debug, Clone)]
pub struct VbRun {
    pub trace: RunTrace,
    pub state: NmtfVariationalState,
}

pub fn run(data: &ObservedMatrix, hyper: &NmtfHyper, k: usize, l: usize, config: &RunConfig) -> Result<VbRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut q = NmtfVariationalState::init(data, k, l, hyper, config.init, &mut rng)?;
    let mut upd = Updater::new(data, hyper);
    let mut trace = RunTrace::new("vb", config.seed, true);
    let mut prev = elbo_nmtf(data, hyper, &q);
    let clock = Clock::start();
    for t in 1..=config.iterations {
        upd.sweep(&mut q);
        let elbo = elbo_nmtf(data, hyper, &q);
        trace.record(t, upd.mse(&q), Some(elbo), &clock);
        if config.converged(prev, elbo) {
            break;
        }
        prev = elbo;
    }
    Ok(VbRun { trace, state: q })
}
