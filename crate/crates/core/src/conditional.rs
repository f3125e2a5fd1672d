//! Shared algebra for the truncated-normal conditionals of single factor entries.
//!
//! Every factor entry x, with the rest of the model fixed (or averaged under
//! q), sees a log density of the form −λx − τ/2·(A·x² − 2·B·x) on x ≥ 0, which
//! is TN(μ = (−λ + τB)/(τA), precision τA).

use rand::Rng;

use crate::randvar::{tn_mode, tn_sample, ExpParams, TruncNormParams};

/// `None` when the quadratic coefficient vanishes: no observed data touches
/// the entry, so the conditional is the exponential prior.
#[inline]
pub(crate) fn tn_from_sums(tau: f64, lambda: f64, sum_sq: f64, sum_lin: f64) -> Option<TruncNormParams> {
    let prec = tau * sum_sq;
    if prec > 0.0 && prec.is_finite() {
        Some(TruncNormParams {
            mu: (-lambda + tau * sum_lin) / prec,
            tau: prec,
        })
    } else {
        None
    }
}

/// What a coordinate step does with a conditional: draw from it, or take
/// its mode. `None` means the conditional is the exponential prior.
pub(crate) trait PointUpdate {
    fn factor(&mut self, cond: Option<TruncNormParams>, lambda: f64) -> f64;
}

pub(crate) struct Draw<'r, R: Rng>(pub &'r mut R);

impl<R: Rng> PointUpdate for Draw<'_, R> {
    fn factor(&mut self, cond: Option<TruncNormParams>, lambda: f64) -> f64 {
        match cond {
            Some(p) => tn_sample(p, self.0),
            None => ExpParams { rate: lambda }.sample(self.0),
        }
    }
}

/// Sets each entry to its conditional mode; an entry no data touches goes to
/// the mode of its exponential prior, zero.
pub(crate) struct Mode;

impl PointUpdate for Mode {
    fn factor(&mut self, cond: Option<TruncNormParams>, _lambda: f64) -> f64 {
        cond.map_or(0.0, tn_mode)
    }
}
