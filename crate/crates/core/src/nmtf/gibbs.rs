//! Gibbs sampler for R ≈ FSGᵀ.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fill_prediction, NmtfHyper, NmtfPointState};
use crate::conditional::{tn_from_sums, Draw, PointUpdate};
use crate::config::GibbsConfig;
use crate::error::Result;
use crate::nmf::gibbs::{line_sums, tau_from_sse};
use crate::nmf::masked_sse;
use crate::observed::{build_index_sets, IndexSets, ObservedMatrix};
use crate::randvar::{GammaParams, TruncNormParams};
use crate::trace::{Clock, RunTrace};

/// A single factor entry: `F(i, k)`, `S(k, l)` or `G(j, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    F(usize, usize),
    S(usize, usize),
    G(usize, usize),
}

pub fn tau_posterior(data: &ObservedMatrix, state: &NmtfPointState, hyper: &NmtfHyper) -> GammaParams {
    let pred = state.product();
    let sse: f64 = data.observed().map(|(i, j, r)| (r - pred[[i, j]]).powi(2)).sum();
    tau_from_sse(hyper.alpha, hyper.beta, data.n_observed(), sse)
}

/// Conditional of one factor entry given all other variables, or `None`
/// when its likelihood terms vanish.
pub fn factor_posterior(
    data: &ObservedMatrix,
    state: &NmtfPointState,
    hyper: &NmtfHyper,
    target: Target,
) -> Option<TruncNormParams> {
    let sets = build_index_sets(data);
    let pred = state.product();
    let r = data.values();
    let (sq, lin, lambda) = match target {
        Target::F(i, k) => {
            let a_t = state.g.dot(&state.s.t());
            let (sq, lin) = line_sums(r.row(i), pred.row(i), &sets.omega_row[i], state.f[[i, k]], &a_t, k);
            (sq, lin, hyper.lambda_f.at(i, k))
        }
        Target::G(j, l) => {
            let b = state.f.dot(&state.s);
            let (sq, lin) = line_sums(r.column(j), pred.column(j), &sets.omega_col[j], state.g[[j, l]], &b, l);
            (sq, lin, hyper.lambda_g.at(j, l))
        }
        Target::S(k, l) => {
            let (sq, lin) = s_sums(data, &sets.omega, &pred, state, k, l);
            (sq, lin, hyper.lambda_s.at(k, l))
        }
    };
    tn_from_sums(state.tau, lambda, sq, lin)
}

fn s_sums(
    data: &ObservedMatrix,
    omega: &[(usize, usize)],
    pred: &Array2<f64>,
    st: &NmtfPointState,
    k: usize,
    l: usize,
) -> (f64, f64) {
    let r = data.values();
    let x = st.s[[k, l]];
    let mut sq = 0.0;
    let mut lin = 0.0;
    for &(i, j) in omega {
        let c = st.f[[i, k]] * st.g[[j, l]];
        sq += c * c;
        lin += (r[[i, j]] - pred[[i, j]] + x * c) * c;
    }
    (sq, lin)
}

/// Coordinate-wise updates of F, S, then G against a cached prediction on Ω.
pub(crate) struct Coordinates<'a> {
    pub data: &'a ObservedMatrix,
    pub sets: IndexSets,
    pub hyper: &'a NmtfHyper,
    pub pred: Array2<f64>,
}

impl<'a> Coordinates<'a> {
    pub fn new(data: &'a ObservedMatrix, hyper: &'a NmtfHyper) -> Self {
        Self {
            data,
            sets: build_index_sets(data),
            hyper,
            pred: Array2::zeros(data.dim()),
        }
    }

    pub fn refresh(&mut self, s: &NmtfPointState) {
        fill_prediction(&mut self.pred, &self.sets.omega, &s.f.dot(&s.s), &s.g);
    }

    pub fn factor_pass(
        &mut self,
        st: &mut NmtfPointState,
        upd: &mut impl PointUpdate,
        after: &mut dyn FnMut(&NmtfPointState),
    ) {
        self.refresh(st);
        let (k_dim, l_dim) = st.ranks();
        let r = self.data.values();

        let a_t = st.g.dot(&st.s.t());
        for i in 0..st.f.nrows() {
            for k in 0..k_dim {
                let cols = &self.sets.omega_row[i];
                let old = st.f[[i, k]];
                let (sq, lin) = line_sums(r.row(i), self.pred.row(i), cols, old, &a_t, k);
                let lambda = self.hyper.lambda_f.at(i, k);
                let new = upd.factor(tn_from_sums(st.tau, lambda, sq, lin), lambda);
                let d = new - old;
                if d != 0.0 {
                    for &j in cols {
                        self.pred[[i, j]] += d * a_t[[j, k]];
                    }
                }
                st.f[[i, k]] = new;
                after(st);
            }
        }

        for k in 0..k_dim {
            for l in 0..l_dim {
                let (sq, lin) = s_sums(self.data, &self.sets.omega, &self.pred, st, k, l);
                let lambda = self.hyper.lambda_s.at(k, l);
                let new = upd.factor(tn_from_sums(st.tau, lambda, sq, lin), lambda);
                let d = new - st.s[[k, l]];
                if d != 0.0 {
                    for &(i, j) in &self.sets.omega {
                        self.pred[[i, j]] += d * st.f[[i, k]] * st.g[[j, l]];
                    }
                }
                st.s[[k, l]] = new;
                after(st);
            }
        }

        let b = st.f.dot(&st.s);
        for j in 0..st.g.nrows() {
            for l in 0..l_dim {
                let rows = &self.sets.omega_col[j];
                let old = st.g[[j, l]];
                let (sq, lin) = line_sums(r.column(j), self.pred.column(j), rows, old, &b, l);
                let lambda = self.hyper.lambda_g.at(j, l);
                let new = upd.factor(tn_from_sums(st.tau, lambda, sq, lin), lambda);
                let d = new - old;
                if d != 0.0 {
                    for &i in rows {
                        self.pred[[i, j]] += d * b[[i, l]];
                    }
                }
                st.g[[j, l]] = new;
                after(st);
            }
        }
    }

    pub fn tau_conditional(&self) -> GammaParams {
        let sse = masked_sse(self.data, &self.sets.omega, &self.pred);
        tau_from_sse(self.hyper.alpha, self.hyper.beta, self.sets.len(), sse)
    }

    pub fn mse(&mut self, st: &NmtfPointState) -> f64 {
        self.refresh(st);
        masked_sse(self.data, &self.sets.omega, &self.pred) / self.sets.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct GibbsRun {
    pub trace: RunTrace,
    pub draws: Vec<NmtfPointState>,
}

pub fn run(data: &ObservedMatrix, hyper: &NmtfHyper, k: usize, l: usize, config: &GibbsConfig) -> Result<GibbsRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = NmtfPointState::init(data, k, l, hyper, config.init, &mut rng)?;
    let mut coords = Coordinates::new(data, hyper);
    let mut trace = RunTrace::new("gibbs", config.seed, false);
    let mut draws = Vec::with_capacity(config.retained_count());
    let clock = Clock::start();
    for t in 1..=config.iterations {
        coords.factor_pass(&mut state, &mut Draw(&mut rng), &mut |_| {});
        state.tau = coords.tau_conditional().sample(&mut rng);
        trace.record(t, coords.mse(&state), None, &clock);
        if config.retains(t) {
            draws.push(state.clone());
        }
    }
    Ok(GibbsRun { trace, draws })
}
