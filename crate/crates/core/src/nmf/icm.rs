//! Iterated conditional modes: coordinate-wise MAP estimation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gibbs::Coordinates;
use super::{NmfHyper, NmfPointState};
use crate::config::RunConfig;
use crate::error::Result;
use crate::observed::ObservedMatrix;
use crate::quality::log_posterior_nmf;
use crate::conditional::Mode;
use crate::trace::{Clock, RunTrace};

#[derive(Debug, Clone)]
pub struct IcmRun {
    pub trace: RunTrace,
    pub state: NmfPointState,
}

pub fn run(data: &ObservedMatrix, hyper: &NmfHyper, k: usize, config: &RunConfig) -> Result<IcmRun> {
    run_observed(data, hyper, k, config, &mut |_| {})
}

/// As [`run`], calling `observer` after every single-variable update.
pub fn run_observed(
    data: &ObservedMatrix,
    hyper: &NmfHyper,
    k: usize,
    config: &RunConfig,
    observer: &mut dyn FnMut(&NmfPointState),
) -> Result<IcmRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = NmfPointState::init(data.rows(), data.cols(), k, hyper, config.init, &mut rng)?;
    let mut coords = Coordinates::new(data, hyper);
    let mut trace = RunTrace::new("icm", config.seed, false);
    let mut prev = log_posterior_nmf(data, hyper, &state);
    let clock = Clock::start();
    for t in 1..=config.iterations {
        coords.factor_pass(&mut state, &mut Mode, &mut |s, _| observer(s));
        state.tau = coords.tau_conditional().mode()?;
        observer(&state);
        trace.record(t, coords.mse(&state), None, &clock);
        let lp = log_posterior_nmf(data, hyper, &state);
        if config.converged(prev, lp) {
            break;
        }
        prev = lp;
    }
    Ok(IcmRun { trace, state })
}
