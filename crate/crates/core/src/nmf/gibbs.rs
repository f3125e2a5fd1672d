//! Gibbs sampler for R ≈ UVᵀ.

use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fill_prediction, masked_sse, NmfHyper, NmfPointState};
use crate::conditional::{tn_from_sums, Draw, PointUpdate};
use crate::config::GibbsConfig;
use crate::error::Result;
use crate::observed::{build_index_sets, IndexSets, ObservedMatrix};
use crate::randvar::{GammaParams, TruncNormParams};
use crate::trace::{Clock, RunTrace};

/// Gamma conditional of τ: shape α + |Ω|/2, rate β + ½Σ_Ω (R − UVᵀ)².
pub fn tau_posterior(data: &ObservedMatrix, u: &Array2<f64>, v: &Array2<f64>, hyper: &NmfHyper) -> GammaParams {
    let sse: f64 = data
        .observed()
        .map(|(i, j, r)| (r - u.row(i).dot(&v.row(j))).powi(2))
        .sum();
    tau_from_sse(hyper.alpha, hyper.beta, data.n_observed(), sse)
}

pub(crate) fn tau_from_sse(alpha: f64, beta: f64, n: usize, sse: f64) -> GammaParams {
    GammaParams {
        shape: alpha + 0.5 * n as f64,
        rate: beta + 0.5 * sse,
    }
}

/// Conditional of U_ik given everything else, or `None` when no observed
/// entry of row `i` involves factor `k`.
pub fn u_posterior(
    data: &ObservedMatrix,
    state: &NmfPointState,
    i: usize,
    k: usize,
    hyper: &NmfHyper,
) -> Option<TruncNormParams> {
    let cols: Vec<usize> = (0..data.cols()).filter(|&j| data.is_observed(i, j)).collect();
    let pred = state.product();
    let (sq, lin) = line_sums(data.values().row(i), pred.row(i), &cols, state.u[[i, k]], &state.v, k);
    tn_from_sums(state.tau, hyper.lambda_u.at(i, k), sq, lin)
}

/// Conditional of V_jk, the mirror image of [`u_posterior`].
pub fn v_posterior(
    data: &ObservedMatrix,
    state: &NmfPointState,
    j: usize,
    k: usize,
    hyper: &NmfHyper,
) -> Option<TruncNormParams> {
    let rows: Vec<usize> = (0..data.rows()).filter(|&i| data.is_observed(i, j)).collect();
    let pred = state.product();
    let (sq, lin) = line_sums(data.values().column(j), pred.column(j), &rows, state.v[[j, k]], &state.u, k);
    tn_from_sums(state.tau, hyper.lambda_v.at(j, k), sq, lin)
}

/// Σ w² and Σ (R − pred + x·w)·w along one row (or column) of the data, where
/// `w` is column `k` of the opposite factor and `x` the entry being updated.
pub(crate) fn line_sums(
    r: ArrayView1<f64>,
    pred: ArrayView1<f64>,
    idx: &[usize],
    x: f64,
    other: &Array2<f64>,
    k: usize,
) -> (f64, f64) {
    let mut sq = 0.0;
    let mut lin = 0.0;
    for &j in idx {
        let w = other[[j, k]];
        sq += w * w;
        lin += (r[j] - pred[j] + x * w) * w;
    }
    (sq, lin)
}

/// Coordinate-wise updates of U then V against a cached prediction on Ω.
pub(crate) struct Coordinates<'a> {
    pub data: &'a ObservedMatrix,
    pub sets: IndexSets,
    pub hyper: &'a NmfHyper,
    pub pred: Array2<f64>,
}

impl<'a> Coordinates<'a> {
    pub fn new(data: &'a ObservedMatrix, hyper: &'a NmfHyper) -> Self {
        Self {
            data,
            sets: build_index_sets(data),
            hyper,
            pred: Array2::zeros(data.dim()),
        }
    }

    pub fn refresh(&mut self, s: &NmfPointState) {
        fill_prediction(&mut self.pred, &self.sets.omega, &s.u, &s.v);
    }

    pub fn sse(&self) -> f64 {
        masked_sse(self.data, &self.sets.omega, &self.pred)
    }

    /// One pass over U (row-major) then V, calling `after` after every entry.
    pub fn factor_pass(
        &mut self,
        s: &mut NmfPointState,
        upd: &mut impl PointUpdate,
        after: &mut dyn FnMut(&NmfPointState, &Array2<f64>),
    ) {
        self.refresh(s);
        let k_dim = s.k();
        let r = self.data.values();
        for i in 0..s.u.nrows() {
            for k in 0..k_dim {
                let cols = &self.sets.omega_row[i];
                let old = s.u[[i, k]];
                let (sq, lin) = line_sums(r.row(i), self.pred.row(i), cols, old, &s.v, k);
                let lambda = self.hyper.lambda_u.at(i, k);
                let new = upd.factor(tn_from_sums(s.tau, lambda, sq, lin), lambda);
                let d = new - old;
                if d != 0.0 {
                    for &j in cols {
                        self.pred[[i, j]] += d * s.v[[j, k]];
                    }
                }
                s.u[[i, k]] = new;
                after(s, &self.pred);
            }
        }
        for j in 0..s.v.nrows() {
            for k in 0..k_dim {
                let rows = &self.sets.omega_col[j];
                let old = s.v[[j, k]];
                let (sq, lin) = line_sums(r.column(j), self.pred.column(j), rows, old, &s.u, k);
                let lambda = self.hyper.lambda_v.at(j, k);
                let new = upd.factor(tn_from_sums(s.tau, lambda, sq, lin), lambda);
                let d = new - old;
                if d != 0.0 {
                    for &i in rows {
                        self.pred[[i, j]] += d * s.u[[i, k]];
                    }
                }
                s.v[[j, k]] = new;
                after(s, &self.pred);
            }
        }
    }

    pub fn tau_conditional(&self) -> GammaParams {
        tau_from_sse(self.hyper.alpha, self.hyper.beta, self.sets.len(), self.sse())
    }

    pub fn mse(&mut self, s: &NmfPointState) -> f64 {
        self.refresh(s);
        self.sse() / self.sets.len() as f64
    }
}

/// Sampler output: the per-iteration trace and the retained draws.
#[derive(Debug, Clone)]
pub struct GibbsRun {
    pub trace: RunTrace,
    pub draws: Vec<NmfPointState>,
}

pub fn run(data: &ObservedMatrix, hyper: &NmfHyper, k: usize, config: &GibbsConfig) -> Result<GibbsRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = NmfPointState::init(data.rows(), data.cols(), k, hyper, config.init, &mut rng)?;
    let mut coords = Coordinates::new(data, hyper);
    let mut trace = RunTrace::new("gibbs", config.seed, false);
    let mut draws = Vec::with_capacity(config.retained_count());
    let clock = Clock::start();
    for t in 1..=config.iterations {
        coords.factor_pass(&mut state, &mut Draw(&mut rng), &mut |_, _| {});
        state.tau = coords.tau_conditional().sample(&mut rng);
        trace.record(t, coords.mse(&state), None, &clock);
        if config.retains(t) {
            draws.push(state.clone());
        }
    }
    Ok(GibbsRun { trace, draws })
}
