use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{invalid, Error, Result};

/// Gamma distribution in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(invalid(format!(
                "gamma shape {shape} and rate {rate} must be positive and finite"
            )));
        }
        Ok(Self { shape, rate })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    /// (shape − 1)/rate. Shapes below one put the mode at zero, which is not a
    /// usable noise precision, so they are rejected.
    pub fn mode(&self) -> Result<f64> {
        if self.shape < 1.0 {
            return Err(Error::GammaModeUndefined(self.shape));
        }
        Ok((self.shape - 1.0) / self.rate)
    }

    /// E[ln X] = ψ(shape) − ln(rate).
    pub fn mean_ln(&self) -> f64 {
        digamma(self.shape) - self.rate.ln()
    }

    pub fn entropy(&self) -> f64 {
        self.shape - self.rate.ln() + ln_gamma(self.shape) + (1.0 - self.shape) * digamma(self.shape)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, 1.0 / self.rate)
            .expect("validated gamma parameters")
            .sample(rng)
    }
}

/// Exponential distribution with the given rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpParams {
    pub rate: f64,
}

impl ExpParams {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid(format!("exponential rate {rate} must be positive")));
        }
        Ok(Self { rate })
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.rate.ln() - self.rate * x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Exp::new(self.rate)
            .expect("validated exponential rate")
            .sample(rng)
    }
}
