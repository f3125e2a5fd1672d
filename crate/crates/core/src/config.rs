use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hyper::InitScheme;

/// Sampler schedule. Draws after `burn_in` are kept at a stride of `thinning`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub init: InitScheme,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            burn_in: 800,
            thinning: 5,
            seed: 0,
            init: InitScheme::PriorDraw,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(invalid(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning must be at least 1"));
        }
        Ok(())
    }

    /// Whether the draw produced at 1-based iteration `t` is retained.
    pub fn retains(&self, t: usize) -> bool {
        t > self.burn_in && (t - self.burn_in) % self.thinning == 0
    }

    pub fn retained_count(&self) -> usize {
        (self.iterations - self.burn_in) / self.thinning
    }
}

/// Schedule for the deterministic-update engines (VB, ICM, NP).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub iterations: usize,
    /// Relative change in the monitored objective below which a run stops.
    /// Zero disables early stopping.
    pub tol: f64,
    pub seed: u64,
    pub init: InitScheme,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            tol: 1e-6,
            seed: 0,
            init: InitScheme::PriorDraw,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(invalid("iterations must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(invalid(format!("tolerance must be non-negative, got {}", self.tol)));
        }
        Ok(())
    }

    pub(crate) fn converged(&self, previous: f64, current: f64) -> bool {
        self.tol > 0.0 && (current - previous).abs() < self.tol * previous.abs().max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_keeps_forty() {
        let c = GibbsConfig::default();
        assert_eq!((1..=c.iterations).filter(|&t| c.retains(t)).count(), 40);
        assert_eq!(c.retained_count(), 40);
        assert!(!c.retains(800) && c.retains(805) && c.retains(1000));
    }

    #[test]
    fn invalid_schedules() {
        let bad = GibbsConfig {
            burn_in: 1000,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GibbsConfig {
            thinning: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(RunConfig {
            iterations: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
