//! One entry point over every (model, engine) pair, returning a uniform [`Fit`].

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::{GibbsConfig, RunConfig};
use crate::error::{invalid, Error, Result};
use crate::hyper::InitScheme;
use crate::nmf::{self, NmfHyper};
use crate::nmtf::{self, NmtfHyper};
use crate::observed::ObservedMatrix;
use crate::quality::{elbo_nmf, elbo_nmtf, ModelDims, QualityReport};
use crate::trace::RunTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Gibbs,
    Vb,
    Icm,
    Np,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Gibbs, Engine::Vb, Engine::Icm, Engine::Np];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Gibbs => "gibbs",
            Engine::Vb => "vb",
            Engine::Icm => "icm",
            Engine::Np => "np",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| invalid(format!("unknown engine {s:?}; expected gibbs, vb, icm or np")))
    }
}

/// Latent dimensionality: K for two factors, (K, L) for three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Rank {
    Nmf { k: usize },
    Nmtf { k: usize, l: usize },
}

impl Rank {
    pub fn dims(self, rows: usize, cols: usize) -> ModelDims {
        match self {
            Rank::Nmf { k } => ModelDims::Nmf { rows, cols, k },
            Rank::Nmtf { k, l } => ModelDims::Nmtf { rows, cols, k, l },
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Nmf { k } => write!(f, "K={k}"),
            Rank::Nmtf { k, l } => write!(f, "K={k},L={l}"),
        }
    }
}

/// Scalar hyperparameters shared by every factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl Priors {
    pub fn nmf(&self) -> NmfHyper {
        NmfHyper::uniform(self.lambda, self.alpha, self.beta)
    }

    pub fn nmtf(&self) -> NmtfHyper {
        NmtfHyper::uniform(self.lambda, self.alpha, self.beta)
    }
}

/// Engine choice and run budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub engine: Engine,
    pub iterations: usize,
    /// Gibbs only. Defaults to four fifths of `iterations`.
    pub burn_in: Option<usize>,
    pub thinning: usize,
    /// VB, ICM and NP early-stopping tolerance; zero runs the full budget.
    pub tol: f64,
    pub init: InitScheme,
    pub priors: Priors,
}

impl FitSpec {
    pub fn new(engine: Engine) -> Self {
        Self {
            engine,
            iterations: 1000,
            burn_in: None,
            thinning: 5,
            tol: 1e-6,
            init: InitScheme::PriorDraw,
            priors: Priors::default(),
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn gibbs_config(&self, seed: u64) -> GibbsConfig {
        GibbsConfig {
            iterations: self.iterations,
            burn_in: self.burn_in.unwrap_or(self.iterations * 4 / 5),
            thinning: self.thinning,
            seed,
            init: self.init,
        }
    }

    /// Checks the budget and priors against a `rows` × `cols` problem at `rank`.
    pub fn validate(&self, rank: Rank, rows: usize, cols: usize) -> Result<()> {
        self.run_config(0).validate()?;
        if self.engine == Engine::Gibbs {
            self.gibbs_config(0).validate()?;
        }
        match rank {
            Rank::Nmf { k } => {
                if self.init == InitScheme::KMeans {
                    return Err(invalid("K-means initialisation applies to tri-factorisation only"));
                }
                self.priors.nmf().validate(rows, cols, k)
            }
            Rank::Nmtf { k, l } => self.priors.nmtf().validate(rows, cols, k, l),
        }
    }

    pub fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig {
            iterations: self.iterations,
            tol: self.tol,
            seed,
            init: self.init,
        }
    }
}

/// Point estimates of the factor matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Factors {
    Nmf { u: Array2<f64>, v: Array2<f64> },
    Nmtf { f: Array2<f64>, s: Array2<f64>, g: Array2<f64> },
}

impl Factors {
    pub fn product(&self) -> Array2<f64> {
        match self {
            Factors::Nmf { u, v } => u.dot(&v.t()),
            Factors::Nmtf { f, s, g } => f.dot(s).dot(&g.t()),
        }
    }
}

/// Outcome of one engine run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub rank: Rank,
    pub engine: Engine,
    pub seed: u64,
    /// Gibbs: mean of per-draw products. VB: product of posterior means.
    /// ICM and NP: product of the point estimates.
    pub prediction: Array2<f64>,
    /// Posterior-mean τ for Gibbs and VB, the MAP value for ICM, 1/MSE for NP.
    pub tau: f64,
    pub elbo: Option<f64>,
    /// Posterior means of the factors for Gibbs and VB.
    pub factors: Factors,
    pub trace: RunTrace,
}

impl Fit {
    pub fn quality(&self, data: &ObservedMatrix) -> Result<QualityReport> {
        QualityReport::evaluate(&self.prediction, self.tau, data, self.rank.dims(data.rows(), data.cols()), self.elbo)
    }

    pub fn log_likelihood(&self, data: &ObservedMatrix) -> f64 {
        crate::quality::log_likelihood(&self.prediction, self.tau, data, data.mask())
    }
}

fn mean_matrix<'a>(items: impl Iterator<Item = &'a Array2<f64>>) -> Array2<f64> {
    let mut n = 0usize;
    let mut acc: Option<Array2<f64>> = None;
    for m in items {
        n += 1;
        match acc.as_mut() {
            Some(a) => *a += m,
            None => acc = Some(m.clone()),
        }
    }
    acc.map(|a| a / n as f64).unwrap_or_default()
}

pub fn fit(data: &ObservedMatrix, rank: Rank, spec: &FitSpec, seed: u64) -> Result<Fit> {
    let (prediction, tau, elbo, factors, trace) = match (rank, spec.engine) {
        (Rank::Nmf { k }, Engine::Gibbs) => {
            let out = nmf::gibbs::run(data, &spec.priors.nmf(), k, &spec.gibbs_config(seed))?;
            let pred = nmf::predict_draws(&out.draws)?;
            let tau = out.draws.iter().map(|d| d.tau).sum::<f64>() / out.draws.len() as f64;
            let factors = Factors::Nmf {
                u: mean_matrix(out.draws.iter().map(|d| &d.u)),
                v: mean_matrix(out.draws.iter().map(|d| &d.v)),
            };
            (pred, tau, None, factors, out.trace)
        }
        (Rank::Nmf { k }, Engine::Vb) => {
            let hyper = spec.priors.nmf();
            let out = nmf::vb::run(data, &hyper, k, &spec.run_config(seed))?;
            let q = out.state;
            let elbo = elbo_nmf(data, &hyper, &q);
            let factors = Factors::Nmf {
                u: q.exp_u.clone(),
                v: q.exp_v.clone(),
            };
            (q.mean_product(), q.exp_tau, Some(elbo), factors, out.trace)
        }
        (Rank::Nmf { k }, Engine::Icm) => {
            let out = nmf::icm::run(data, &spec.priors.nmf(), k, &spec.run_config(seed))?;
            let s = out.state;
            (s.product(), s.tau, None, Factors::Nmf { u: s.u, v: s.v }, out.trace)
        }
        (Rank::Nmf { k }, Engine::Np) => {
            let out = nmf::np::run(data, k, &spec.run_config(seed))?;
            let tau = np_tau(&out.trace);
            (out.product(), tau, None, Factors::Nmf { u: out.u, v: out.v }, out.trace)
        }
        (Rank::Nmtf { k, l }, Engine::Gibbs) => {
            let out = nmtf::gibbs::run(data, &spec.priors.nmtf(), k, l, &spec.gibbs_config(seed))?;
            let pred = nmtf::predict_draws(&out.draws)?;
            let tau = out.draws.iter().map(|d| d.tau).sum::<f64>() / out.draws.len() as f64;
            let factors = Factors::Nmtf {
                f: mean_matrix(out.draws.iter().map(|d| &d.f)),
                s: mean_matrix(out.draws.iter().map(|d| &d.s)),
                g: mean_matrix(out.draws.iter().map(|d| &d.g)),
            };
            (pred, tau, None, factors, out.trace)
        }
        (Rank::Nmtf { k, l }, Engine::Vb) => {
            let hyper = spec.priors.nmtf();
            let out = nmtf::vb::run(data, &hyper, k, l, &spec.run_config(seed))?;
            let q = out.state;
            let elbo = elbo_nmtf(data, &hyper, &q);
            let factors = Factors::Nmtf {
                f: q.exp_f.clone(),
                s: q.exp_s.clone(),
                g: q.exp_g.clone(),
            };
            (q.mean_product(), q.exp_tau, Some(elbo), factors, out.trace)
        }
        (Rank::Nmtf { k, l }, Engine::Icm) => {
            let out = nmtf::icm::run(data, &spec.priors.nmtf(), k, l, &spec.run_config(seed))?;
            let s = out.state;
            (s.product(), s.tau, None, Factors::Nmtf { f: s.f, s: s.s, g: s.g }, out.trace)
        }
        (Rank::Nmtf { k, l }, Engine::Np) => {
            let out = nmtf::np::run(data, k, l, &spec.run_config(seed))?;
            let tau = np_tau(&out.trace);
            let pred = out.product();
            (pred, tau, None, Factors::Nmtf { f: out.f, s: out.s, g: out.g }, out.trace)
        }
    };
    Ok(Fit {
        rank,
        engine: spec.engine,
        seed,
        prediction,
        tau,
        elbo,
        factors,
        trace,
    })
}

/// Maximum-likelihood precision of the residuals, bounded for exact fits.
fn np_tau(trace: &RunTrace) -> f64 {
    let mse = trace.final_mse().unwrap_or(1.0);
    1.0 / mse.max(1e-300)
}
