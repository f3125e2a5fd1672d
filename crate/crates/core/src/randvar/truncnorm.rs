//! The normal distribution truncated to `[0, ∞)`, parameterised by location
//! `mu` and precision `tau`.
//!
//! Moments are expressed through the inverse Mills ratio λ(x) = φ(x)/(1 − Φ(x))
//! and δ(x) = λ(x)(λ(x) − x), both evaluated at the standardised lower bound
//! a = −μ√τ. Below a = [`STAB_THRESHOLD`] they come from the scaled
//! complementary error function; above it the distribution is close to an
//! exponential with rate |μ|τ and the moments come from the asymptotic
//! expansion of that tail, which avoids the cancellation in λ − a and 1 − δ.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardUniform};

use super::erf::{erfc, erfcx};
use crate::error::{invalid, Result};

/// Standardised bound above which the exponential-tail expansion is used.
pub const STAB_THRESHOLD: f64 = 30.0;

/// Below this standardised bound the sampler inverts the CDF; above it uses
/// exponential rejection.
const SAMPLER_TAIL_SWITCH: f64 = 1.0;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// λ(x) − x = P(t)/x and 1 − δ(x) = t·V(t) with t = 1/x², as power series in t.
const TAIL_EXCESS: [f64; 10] = [
    1.0, -2.0, 10.0, -74.0, 706.0, -8162.0, 110410.0, -1708394.0, 29752066.0, -576037442.0,
];
const TAIL_VAR: [f64; 9] = [
    1.0, -6.0, 50.0, -518.0, 6354.0, -89782.0, 1435330.0, -25625910.0, 505785122.0,
];

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Inverse Mills ratio φ(x)/(1 − Φ(x)).
///
/// Strictly positive for every finite `x`; in the far left tail where the true
/// value underflows it returns `f64::MIN_POSITIVE`.
pub fn lambda_fn(x: f64) -> f64 {
    if x > STAB_THRESHOLD {
        x + horner(&TAIL_EXCESS, 1.0 / (x * x)) / x
    } else if x < -37.0 {
        // 1 − Φ(x) rounds to one here.
        std_normal_pdf(x).max(f64::MIN_POSITIVE)
    } else {
        SQRT_2_OVER_PI / erfcx(x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// λ(x) − x, the mean excess of a standard normal conditioned on exceeding x.
pub fn mills_excess(x: f64) -> f64 {
    if x > STAB_THRESHOLD {
        horner(&TAIL_EXCESS, 1.0 / (x * x)) / x
    } else {
        lambda_fn(x) - x
    }
}

/// δ(x) = λ(x)(λ(x) − x), which lies in (0, 1).
pub fn delta_fn(x: f64) -> f64 {
    if x > STAB_THRESHOLD {
        1.0 - one_minus_delta(x)
    } else {
        lambda_fn(x) * mills_excess(x)
    }
}

/// 1 − δ(x), the variance of a standard normal conditioned on exceeding x.
pub fn one_minus_delta(x: f64) -> f64 {
    if x > STAB_THRESHOLD {
        let t = 1.0 / (x * x);
        t * horner(&TAIL_VAR, t)
    } else {
        1.0 - lambda_fn(x) * mills_excess(x)
    }
}

/// Location and precision of a normal truncated below at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncNormParams {
    pub mu: f64,
    pub tau: f64,
}

impl TruncNormParams {
    pub fn new(mu: f64, tau: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(invalid(format!("truncated normal location {mu} is not finite")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("truncated normal precision {tau} must be positive")));
        }
        Ok(Self { mu, tau })
    }

    /// Standardised lower bound −μ√τ.
    fn lower_bound(&self) -> f64 {
        -self.mu * self.tau.sqrt()
    }
}

/// Mean and variance of TN(μ, τ).
pub fn tn_mean_var(p: TruncNormParams) -> (f64, f64) {
    let a = p.lower_bound();
    let sd = p.tau.sqrt().recip();
    let mean = if a <= 0.0 {
        p.mu + sd * lambda_fn(a)
    } else {
        sd * mills_excess(a)
    };
    (mean, one_minus_delta(a) / p.tau)
}

/// Mode of TN(μ, τ): the location clipped at zero.
pub fn tn_mode(p: TruncNormParams) -> f64 {
    p.mu.max(0.0)
}

/// Differential entropy of TN(μ, τ).
pub fn tn_entropy(p: TruncNormParams) -> f64 {
    let a = p.lower_bound();
    let ln_sd = -0.5 * p.tau.ln();
    if a <= 0.0 {
        // ln Z with Z = 1 − Φ(a) = 1 − erfc(−a/√2)/2 ∈ [1/2, 1)
        let ln_z = (-0.5 * erfc(-a * std::f64::consts::FRAC_1_SQRT_2)).ln_1p();
        LN_SQRT_2PI + 0.5 + ln_sd + ln_z + 0.5 * a * lambda_fn(a)
    } else {
        0.5 + ln_sd - lambda_fn(a).ln() + 0.5 * a * mills_excess(a)
    }
}

/// TN with precision `rate²` whose mean equals the exponential mean `1/rate`.
///
/// Stands in for a variational factor whose likelihood terms are all absent,
/// where the exact optimum is the exponential prior itself.
pub fn exp_matched_tn(rate: f64) -> TruncNormParams {
    static ROOT: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    // y + λ(−y) = 1 is increasing in y and brackets a root in (0, 1).
    let y = *ROOT.get_or_init(|| {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + lambda_fn(-mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    });
    TruncNormParams {
        mu: y / rate,
        tau: rate * rate,
    }
}

/// Draws from TN(μ, τ).
///
/// Inverse-CDF sampling while the bound sits in the body of the normal, and
/// Robert's exponential-proposal rejection sampler past it.
pub fn tn_sample<R: Rng + ?Sized>(p: TruncNormParams, rng: &mut R) -> f64 {
    let a = p.lower_bound();
    let sd = p.tau.sqrt().recip();
    // Work with the excess z − a ≥ 0 so x = sd·(z − a) never cancels.
    let excess = if a < SAMPLER_TAIL_SWITCH {
        let u: f64 = 1.0 - rng.sample::<f64, _>(StandardUniform);
        let z = std::f64::consts::SQRT_2
            * statrs::function::erf::erfc_inv(u * erfc(a * std::f64::consts::FRAC_1_SQRT_2));
        (z - a).max(0.0)
    } else {
        let rate = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = Exp1.sample(rng);
            let excess = e / rate;
            let z = a + excess;
            let u: f64 = rng.sample(StandardUniform);
            if u <= (-0.5 * (z - rate) * (z - rate)).exp() {
                break excess;
            }
        }
    };
    sd * excess
}
