use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Per-iteration record of one engine run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub engine: String,
    pub seed: u64,
    /// (iteration, training MSE), iterations starting at 1.
    pub iter_mse: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iter_elbo: Option<Vec<(usize, f64)>>,
    /// (iteration, seconds since the first sweep started).
    #[serde(default)]
    pub wall_clock: Vec<(usize, f64)>,
}

impl RunTrace {
    pub fn new(engine: impl Into<String>, seed: u64, with_elbo: bool) -> Self {
        Self {
            engine: engine.into(),
            seed,
            iter_mse: Vec::new(),
            iter_elbo: with_elbo.then(Vec::new),
            wall_clock: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, iteration: usize, mse: f64, elbo: Option<f64>, clock: &Clock) {
        self.iter_mse.push((iteration, mse));
        if let (Some(trace), Some(value)) = (self.iter_elbo.as_mut(), elbo) {
            trace.push((iteration, value));
        }
        self.wall_clock.push((iteration, clock.elapsed()));
    }

    pub fn iterations(&self) -> usize {
        self.iter_mse.last().map_or(0, |&(it, _)| it)
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.iter_mse.last().map(|&(_, m)| m)
    }

    pub fn final_elbo(&self) -> Option<f64> {
        self.iter_elbo.as_ref()?.last().map(|&(_, e)| e)
    }

    /// First iteration whose MSE is at most `target`.
    pub fn first_reaching(&self, target: f64) -> Option<usize> {
        self.iter_mse
            .iter()
            .find(|&&(_, m)| m <= target)
            .map(|&(it, _)| it)
    }

    /// Drops wall-clock data so reports are reproducible byte for byte.
    pub fn strip_timing(&mut self) {
        self.wall_clock.clear();
    }
}

/// Wall-clock timer around the sweep loop.
pub(crate) struct Clock(Instant);

impl Clock {
    pub(crate) fn start() -> Self {
        Clock(Instant::now())
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
