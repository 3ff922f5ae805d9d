use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a driver picks its first support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarmStartKind {
    /// Greedy forward selection on a small fixed sample.
    Greedy,
    /// Uniformly random `k`-subset drawn from the seed.
    Random,
}

/// Solver settings shared by both drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// Number of features to select.
    pub k: usize,
    /// Ridge weight: the penalty on row coefficients is `||U||² / gamma`.
    pub gamma: f64,
    /// Relative termination slack; a master value `eta` certifies `c(s)`
    /// once `eta >= c(s) * (1 - tolerance) - 1e-12`.
    pub tolerance: f64,
    pub seed: u64,
    /// Row sample cap for stochastic cuts.
    pub g0: usize,
    /// Constant in the column sample size rule.
    pub c_const: f64,
    pub max_iterations: usize,
    /// Number of times the stochastic driver may double its row sample after
    /// a failed certification before giving up.
    pub max_certification_retries: usize,
    /// Overrides the driver's default warm start when set.
    pub warm_start: Option<WarmStartKind>,
    /// Worker threads for row loops; 0 uses the ambient rayon pool.
    pub workers: usize,
}

pub const ABSOLUTE_TOLERANCE_FLOOR: f64 = 1e-12;

impl ProblemConfig {
    pub fn new(k: usize, gamma: f64) -> Self {
        Self {
            k,
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k > p {
            return Err(Error::InvalidConfig(format!(
                "k = {} exceeds the number of features p = {p}",
                self.k
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig("tolerance must be nonnegative".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.g0 == 0 {
            return Err(Error::InvalidConfig("g0 must be at least 1".into()));
        }
        if !(self.c_const > 0.0) {
            return Err(Error::InvalidConfig("c_const must be positive".into()));
        }
        Ok(())
    }

    /// True when a master value `eta` certifies the objective value `cost`.
    pub fn is_certified(&self, eta: f64, cost: f64) -> bool {
        eta >= cost * (1.0 - self.tolerance) - ABSOLUTE_TOLERANCE_FLOOR
    }
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            k: 1,
            gamma: 1.0,
            tolerance: 1e-6,
            seed: 0,
            g0: 100,
            c_const: 1.0,
            max_iterations: 500,
            max_certification_retries: 4,
            warm_start: None,
            workers: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_recommended_sampling() {
        let c = ProblemConfig::default();
        assert_eq!(c.g0, 100);
        assert_eq!(c.c_const, 1.0);
        assert_eq!(c.max_iterations, 500);
    }

    #[test]
    fn validation_errors() {
        assert!(ProblemConfig::new(3, 1.0).validate(2).is_err());
        assert!(ProblemConfig::new(0, 1.0).validate(2).is_err());
        assert!(ProblemConfig::new(1, 0.0).validate(2).is_err());
        assert!(ProblemConfig::new(1, -1.0).validate(2).is_err());
        let mut c = ProblemConfig::new(1, 1.0);
        c.max_iterations = 0;
        assert!(c.validate(2).is_err());
        assert!(ProblemConfig::new(2, 1.0).validate(2).is_ok());
    }

    #[test]
    fn certification_slack() {
        let c = ProblemConfig::default();
        assert!(c.is_certified(1.0, 1.0));
        assert!(c.is_certified(1.0 - 5e-7, 1.0));
        assert!(!c.is_certified(1.0 - 2e-6, 1.0));
        assert!(c.is_certified(0.0, 0.0));
    }
}
