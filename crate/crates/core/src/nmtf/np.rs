//! Multiplicative-update tri-factorisation restricted to the observed entries.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NmtfHyper, NmtfPointState};
use crate::config::RunConfig;
use crate::error::Result;
use crate::nmf::np::{check_nonnegative, masked, masked_values, multiplicative};
use crate::observed::ObservedMatrix;
use crate::trace::{Clock, RunTrace};

#[derive(Debug, Clone)]
pub struct NpRun {
    pub trace: RunTrace,
    pub f: Array2<f64>,
    pub s: Array2<f64>,
    pub g: Array2<f64>,
}

impl NpRun {
    pub fn product(&self) -> Array2<f64> {
        self.f.dot(&self.s).dot(&self.g.t())
    }
}

/// F ← F ⊙ [(M⊙R)GSᵀ] ⁄ [(M⊙FSGᵀ)GSᵀ], then the analogous S and G steps.
pub fn run(data: &ObservedMatrix, k: usize, l: usize, config: &RunConfig) -> Result<NpRun> {
    config.validate()?;
    check_nonnegative(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = NmtfPointState::init(data, k, l, &NmtfHyper::default(), config.init, &mut rng)?;
    let (mut f, mut s, mut g) = (init.f, init.s, init.g);
    let mask = data.mask();
    let r = masked_values(data);
    let n = data.n_observed() as f64;
    let fit = |f: &Array2<f64>, s: &Array2<f64>, g: &Array2<f64>| masked(mask, f.dot(s).dot(&g.t()));
    let mut trace = RunTrace::new("np", config.seed, false);
    let clock = Clock::start();
    let mut prev = f64::INFINITY;
    for t in 1..=config.iterations {
        let gs = g.dot(&s.t());
        let den = fit(&f, &s, &g).dot(&gs);
        multiplicative(&mut f, &r.dot(&gs), &den);
        let m = fit(&f, &s, &g);
        multiplicative(&mut s, &f.t().dot(&r).dot(&g), &f.t().dot(&m).dot(&g));
        let fs = f.dot(&s);
        let den = fit(&f, &s, &g).t().dot(&fs);
        multiplicative(&mut g, &r.t().dot(&fs), &den);
        let mse = (&r - &fit(&f, &s, &g)).mapv(|e| e * e).sum() / n;
        trace.record(t, mse, None, &clock);
        if config.converged(prev, mse) {
            break;
        }
        prev = mse;
    }
    Ok(NpRun { trace, f, s, g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyper::InitScheme;

    #[test]
    fn mse_non_increasing_and_nonnegative() {
        let values = Array2::from_shape_fn((10, 8), |(i, j)| ((i * 7 + j * 11) % 13) as f64 / 4.0);
        let data = ObservedMatrix::fully_observed(values).unwrap();
        let cfg = RunConfig {
            iterations: 200,
            tol: 0.0,
            seed: 1,
            init: InitScheme::PriorDraw,
        };
        let out = run(&data, 3, 2, &cfg).unwrap();
        for w in out.trace.iter_mse.windows(2) {
            assert!(w[1].1 <= w[0].1 * (1.0 + 1e-12), "{:?}", w);
        }
        assert!(out.product().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn negative_entry_rejected() {
        let data = ObservedMatrix::fully_observed(ndarray::array![[-1.0]]).unwrap();
        assert!(run(&data, 1, 1, &RunConfig::default()).is_err());
    }
}
