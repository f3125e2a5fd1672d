//! Distributions used by the models and the numerics behind them.

pub mod erf;
mod gamma;
mod truncnorm;

pub use gamma::{ExpParams, GammaParams};
pub use truncnorm::{
    delta_fn, exp_matched_tn, lambda_fn, mills_excess, one_minus_delta, tn_entropy, tn_mean_var, tn_mode,
    tn_sample, TruncNormParams, STAB_THRESHOLD,
};

/// First and second moments of a factor entry under its variational posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
}

impl Moments {
    pub fn of(p: TruncNormParams) -> Self {
        let (mean, var) = tn_mean_var(p);
        Self { mean, var }
    }

    /// E[X²] = E[X]² + Var[X].
    pub fn second(&self) -> f64 {
        self.mean * self.mean + self.var
    }
}
