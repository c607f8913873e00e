//! Property estimators: the empirical (SML) plug-in, split-sample polynomial
//! estimators for entropy and distance to uniformity, smoothed Good–Toulmin
//! estimators for support coverage and support size, and median boosting.

mod coverage;
mod median;
mod sml;
mod split;

pub use coverage::{
    coverage_coefficient, poisson_tail, support_coverage_estimate, support_coverage_from_profile,
    support_estimate, Smoothing,
};
pub use median::median_boost;
pub use sml::sml_plugin;
pub use split::{dtu_estimate, entropy_estimate, SplitEstimator, SplitRule, SplitSample};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// How the polynomial degree and branch thresholds are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Degree `max(2, floor(0.25 alpha ln n))` with the asymptotic constants.
    #[default]
    Paper,
    /// Degree `floor(0.5 ln n)` and thresholds sized for n in the thousands.
    Performance,
}

/// Tuning shared by the split-sample and Good–Toulmin estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Second-half count threshold multiplier (`N_x < c1 ln n`).
    pub c1: f64,
    /// First-half count threshold multiplier (`N'_x < c2 ln n`).
    pub c2: f64,
    pub alpha: f64,
    #[serde(default)]
    pub degree_override: Option<usize>,
    /// Smoothing mean; `ln(3/epsilon)` when absent.
    #[serde(default)]
    pub r: Option<f64>,
    pub epsilon: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub smoothing: Smoothing,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl EstimatorConfig {
    pub fn paper() -> Self {
        Self {
            c1: 72.0,
            c2: 36.0,
            alpha: 0.1,
            degree_override: None,
            r: None,
            epsilon: 0.1,
            mode: Mode::Paper,
            smoothing: Smoothing::Poisson,
        }
    }

    pub fn performance() -> Self {
        Self {
            c1: PERFORMANCE_C1,
            c2: PERFORMANCE_C2,
            mode: Mode::Performance,
            ..Self::paper()
        }
    }

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Paper => Self::paper(),
            Mode::Performance => Self::performance(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return invalid("c1 and c2 must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if let Some(r) = self.r {
            if !(r >= 0.0) || !r.is_finite() {
                return invalid(format!("smoothing mean r must be finite and >= 0, got {r}"));
            }
        }
        Ok(())
    }

    /// Polynomial degree for a half-sample of size `n`.
    pub fn degree(&self, n: usize) -> usize {
        let ln_n = (n.max(1) as f64).ln();
        let l = match (self.degree_override, self.mode) {
            (Some(l), _) => l,
            (None, Mode::Paper) => ((0.25 * self.alpha * ln_n).floor() as usize).max(2),
            (None, Mode::Performance) => (0.5 * ln_n).floor() as usize,
        };
        l.clamp(1, crate::poly_approx::MAX_DEGREE)
    }

    /// Poisson smoothing mean, defaulting to `ln(3/epsilon)`.
    pub fn smoothing_mean(&self) -> f64 {
        self.r.unwrap_or_else(|| (3.0 / self.epsilon).ln())
    }
}

/// Threshold multipliers used by [`Mode::Performance`].
pub const PERFORMANCE_C1: f64 = 0.5;
pub const PERFORMANCE_C2: f64 = 0.25;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = EstimatorConfig::default();
        assert_eq!((c.c1, c.c2, c.alpha), (72.0, 36.0, 0.1));
        assert!((c.smoothing_mean() - 30f64.ln()).abs() < 1e-15);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn degrees() {
        let paper = EstimatorConfig::paper();
        assert_eq!(paper.degree(10_000), 2);
        let perf = EstimatorConfig::performance();
        assert_eq!(perf.degree(587), 3);
        assert_eq!(perf.degree(10_000), 4);
        let fixed = EstimatorConfig {
            degree_override: Some(7),
            ..paper
        };
        assert_eq!(fixed.degree(5), 7);
    }

    #[test]
    fn validation() {
        let bad = EstimatorConfig {
            alpha: 1.5,
            ..EstimatorConfig::paper()
        };
        assert!(bad.validate().is_err());
        assert!(EstimatorConfig::paper()
            .with_epsilon(0.0)
            .validate()
            .is_err());
    }
}
