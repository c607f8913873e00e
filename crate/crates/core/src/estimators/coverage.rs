//! Smoothed Good–Toulmin estimators of support coverage and support size.
//!
//! With `t = (m - n)/n`, the estimate of the expected number of distinct
//! symbols in `m` samples is `sum_i phi_i - sum_i phi_i (-t)^i Pr(Z >= i)`,
//! where the tail of the smoothing variable `Z` damps the high-order terms.

use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::EstimatorConfig;
use crate::error::{invalid, Result};
use crate::profiles::{extract_profile, ln_factorial, Profile};

/// Law of the smoothing variable `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// `Z ~ Poisson(r)`.
    #[default]
    Poisson,
    /// `Z ~ Binomial(K, q)` with `K = ceil(log_3(n t^2 / (t - 1)) / 2)`,
    /// `q = 2/(t + 2)`; unsmoothed when `t <= 1`.
    Binomial,
}

/// `ln Pr(Z >= i)` for `Z ~ Poisson(r)`.
fn ln_poisson_tail(i: u32, r: f64) -> f64 {
    if i == 0 {
        return 0.0;
    }
    if r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let ln_pmf = |j: u32| -r + j as f64 * r.ln() - ln_factorial(j);
    if i as f64 > r {
        // terms decrease geometrically from j = i on
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut j = i;
        loop {
            term *= r / (j as f64 + 1.0);
            sum += term;
            j += 1;
            if term < 1e-17 * sum {
                break;
            }
        }
        ln_pmf(i) + sum.ln()
    } else {
        let below: f64 = (0..i).map(|j| ln_pmf(j).exp()).sum();
        (1.0 - below).max(0.0).ln()
    }
}

/// `Pr(Z >= i)` for `Z ~ Poisson(r)`.
pub fn poisson_tail(i: u32, r: f64) -> f64 {
    ln_poisson_tail(i, r).exp()
}

fn ln_binomial_tail(i: u32, trials: u32, q: f64) -> f64 {
    if i == 0 {
        return 0.0;
    }
    if i > trials {
        return f64::NEG_INFINITY;
    }
    let lnk = ln_factorial(trials);
    let p: f64 = (i..=trials)
        .map(|j| {
            (lnk - ln_factorial(j) - ln_factorial(trials - j)
                + j as f64 * q.ln()
                + (trials - j) as f64 * (1.0 - q).ln())
            .exp()
        })
        .sum();
    p.min(1.0).ln()
}

/// Coefficient `1 - (-t)^i Pr(Z >= i)` of `phi_i` under Poisson(r) smoothing.
pub fn coverage_coefficient(i: u32, t: f64, r: f64) -> f64 {
    1.0 - signed_term(i, t, ln_poisson_tail(i, r))
}

/// `(-t)^i exp(ln_tail)`, computed in log space.
fn signed_term(i: u32, t: f64, ln_tail: f64) -> f64 {
    if i == 0 {
        return ln_tail.exp();
    }
    if t == 0.0 || ln_tail == f64::NEG_INFINITY {
        return 0.0;
    }
    let magnitude = (i as f64 * t.abs().ln() + ln_tail).exp();
    let negative = t > 0.0 && i % 2 == 1;
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Smoothed Good–Toulmin estimate of `S_m` from a profile of `n` samples.
pub fn support_coverage_from_profile(
    profile: &Profile,
    m: u64,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    let n = profile.n() as u64;
    if n == 0 {
        return invalid("support coverage needs at least one sample");
    }
    if m < n {
        return invalid(format!("horizon m = {m} is below the sample size n = {n}"));
    }
    let r = cfg.smoothing_mean();
    if !(r >= 0.0 && r.is_finite()) {
        return invalid(format!("smoothing mean must be finite and >= 0, got {r}"));
    }
    let t = (m - n) as f64 / n as f64;
    let binomial = match cfg.smoothing {
        Smoothing::Binomial if t > 1.0 => {
            let x = n as f64 * t * t / (t - 1.0);
            let trials = (0.5 * x.ln() / 3f64.ln()).ceil().max(0.0) as u32;
            Some((trials, 2.0 / (t + 2.0)))
        }
        _ => None,
    };
    let ln_tail = |i: u32| match (cfg.smoothing, binomial) {
        (Smoothing::Poisson, _) => ln_poisson_tail(i, r),
        (Smoothing::Binomial, Some((trials, q))) => ln_binomial_tail(i, trials, q),
        (Smoothing::Binomial, None) => 0.0,
    };
    let estimate = profile
        .prevalence()
        .counts
        .iter()
        .map(|(&mu, &phi)| phi as f64 * (1.0 - signed_term(mu, t, ln_tail(mu))))
        .sum();
    Ok(estimate)
}

/// Smoothed Good–Toulmin estimate of the expected number of distinct
/// symbols in `m` samples.
pub fn support_coverage_estimate<T: Eq + Hash>(
    samples: &[T],
    m: u64,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    support_coverage_from_profile(&extract_profile(samples)?, m, cfg)
}

/// Estimate of `S(p)/k` for distributions whose nonzero probabilities are at
/// least `1/k`, via the coverage estimate at `m = ceil(k ln(3/epsilon))` with
/// `r = ln(3/epsilon)`. Clamped to `[0, 1]`.
///
/// When `n >= m` the observed fraction `distinct / k` is returned.
pub fn support_estimate<T: Eq + Hash>(samples: &[T], k: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if k == 0 {
        return invalid("support estimate needs k >= 1");
    }
    let profile = extract_profile(samples)?;
    let r = (3.0 / epsilon).ln();
    let m = (k as f64 * r).ceil() as u64;
    let raw = if profile.n() as u64 >= m {
        profile.parts() as f64
    } else {
        let cfg = EstimatorConfig {
            r: Some(r),
            smoothing: Smoothing::Poisson,
            ..EstimatorConfig::paper().with_epsilon(epsilon)
        };
        support_coverage_from_profile(&profile, m, &cfg)?
    };
    Ok((raw / k as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_r(r: f64) -> EstimatorConfig {
        EstimatorConfig {
            r: Some(r),
            ..EstimatorConfig::paper()
        }
    }

    #[test]
    fn poisson_tail_values() {
        assert_eq!(poisson_tail(0, 2.0), 1.0);
        assert!((poisson_tail(1, 3f64.ln()) - 2.0 / 3.0).abs() < 1e-15);
        let r = 1.5f64;
        let direct = 1.0 - (-r).exp() * (1.0 + r + r * r / 2.0);
        assert!((poisson_tail(3, r) - direct).abs() < 1e-14);
        // far tail stays positive and matches the leading term
        let ln_lead = -1.0 - ln_factorial(150);
        let ln_tail = ln_poisson_tail(150, 1.0);
        assert!((ln_tail - ln_lead - (1.0f64 + 1.0 / 151.0).ln()).abs() < 1e-4);
        assert_eq!(poisson_tail(1, 0.0), 0.0);
    }

    #[test]
    fn t_zero_counts_distinct() {
        let xs = [1, 1, 2, 3, 3, 3, 9];
        let v = support_coverage_estimate(&xs, 7, &cfg_r(1.0)).unwrap();
        assert!((v - 4.0).abs() < 1e-15);
    }

    #[test]
    fn all_distinct_doubling() {
        let n = 30u64;
        let xs: Vec<u64> = (0..n).collect();
        let v = support_coverage_estimate(&xs, 2 * n, &cfg_r(3f64.ln())).unwrap();
        assert!((v - 5.0 / 3.0 * n as f64).abs() < 1e-12, "{v}");
    }

    #[test]
    fn rejects_short_horizon() {
        assert!(support_coverage_estimate(&[1, 2, 3], 2, &cfg_r(1.0)).is_err());
    }

    #[test]
    fn coefficient_bound_grid() {
        for r in [0.5, 1.0, 2.0] {
            for t in [1.0, 2.0, 3.0] {
                for i in 1..=200 {
                    let c = coverage_coefficient(i, t, r);
                    assert!(c.abs() <= 1.0 + (r * (t - 1.0)).exp() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn binomial_smoothing_unsmoothed_below_one() {
        let xs: Vec<u32> = (0..20).collect();
        let cfg = EstimatorConfig {
            smoothing: Smoothing::Binomial,
            ..EstimatorConfig::paper()
        };
        // t = 1, plain Good–Toulmin: 20 + 20 = 40
        let v = support_coverage_estimate(&xs, 40, &cfg).unwrap();
        assert!((v - 40.0).abs() < 1e-12);
        let w = support_coverage_estimate(&xs, 80, &cfg).unwrap();
        assert!(w.is_finite() && w >= 20.0);
    }

    #[test]
    fn support_all_distinct_at_horizon() {
        let k = 100;
        let eps = 0.5f64;
        let m = (k as f64 * (3.0 / eps).ln()).ceil() as u32;
        let xs: Vec<u32> = (0..m).collect();
        let v = support_estimate(&xs, k, eps).unwrap();
        assert_eq!(v, 1.0f64.min(m as f64 / k as f64));
        let few: Vec<u32> = (0..40).collect();
        assert!((0.0..=1.0).contains(&support_estimate(&few, k, eps).unwrap()));
        assert!(support_estimate(&few, k, 1.0).is_err());
    }
}
