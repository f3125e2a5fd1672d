//! Non-probabilistic baseline: masked multiplicative updates minimising the
//! squared error on Ω.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NmfHyper, NmfPointState};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::observed::ObservedMatrix;
use crate::trace::{Clock, RunTrace};

pub(crate) const DENOM_FLOOR: f64 = 1e-12;

pub(crate) fn check_nonnegative(data: &ObservedMatrix) -> Result<()> {
    match data.observed().find(|&(_, _, v)| v < 0.0) {
        Some((row, col, value)) => Err(Error::NegativeEntry { row, col, value }),
        None => Ok(()),
    }
}

/// M ⊙ R with unobserved entries zeroed.
pub(crate) fn masked_values(data: &ObservedMatrix) -> Array2<f64> {
    let mut out = data.values().clone();
    out.zip_mut_with(data.mask(), |x, &m| {
        if !m {
            *x = 0.0
        }
    });
    out
}

pub(crate) fn masked(m: &Array2<bool>, x: Array2<f64>) -> Array2<f64> {
    let mut x = x;
    x.zip_mut_with(m, |v, &o| {
        if !o {
            *v = 0.0
        }
    });
    x
}

/// `x ← x ⊙ num / max(den, floor)`.
pub(crate) fn multiplicative(x: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>) {
    ndarray::Zip::from(x).and(num).and(den).for_each(|x, &n, &d| {
        *x *= n / d.max(DENOM_FLOOR);
    });
}

#[derive(Debug, Clone)]
pub struct NpRun {
    pub trace: RunTrace,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl NpRun {
    pub fn product(&self) -> Array2<f64> {
        self.u.dot(&self.v.t())
    }
}

pub fn run(data: &ObservedMatrix, k: usize, config: &RunConfig) -> Result<NpRun> {
    config.validate()?;
    check_nonnegative(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = NmfPointState::init(data.rows(), data.cols(), k, &NmfHyper::default(), config.init, &mut rng)?;
    let (mut u, mut v) = (init.u, init.v);
    let mask = data.mask();
    let r = masked_values(data);
    let n = data.n_observed() as f64;
    let mut trace = RunTrace::new("np", config.seed, false);
    let clock = Clock::start();
    let mut prev = f64::INFINITY;
    for t in 1..=config.iterations {
        let fit = masked(mask, u.dot(&v.t()));
        multiplicative(&mut u, &r.dot(&v), &fit.dot(&v));
        let fit = masked(mask, u.dot(&v.t()));
        multiplicative(&mut v, &r.t().dot(&u), &fit.t().dot(&u));
        let fit = masked(mask, u.dot(&v.t()));
        let mse = (&r - &fit).mapv(|e| e * e).sum() / n;
        trace.record(t, mse, None, &clock);
        if config.converged(prev, mse) {
            break;
        }
        prev = mse;
    }
    Ok(NpRun { trace, u, v })
}
