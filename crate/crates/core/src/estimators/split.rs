//! Split-sample estimators of additive properties `f(p) = sum_x g(p(x))`.
//!
//! A `2n` sample is cut into a first half (counts `N'_x`) that decides, per
//! symbol, whether `g(p(x))` is estimated by an unbiased polynomial estimate
//! or by the bias-corrected empirical value, and a second half (counts `N_x`)
//! that feeds the chosen estimate. Symbols whose second-half count exceeds
//! the polynomial range while the first half called them small contribute
//! nothing, which keeps the change from any one sample bounded.

use std::collections::BTreeMap;

use serde::Serialize;

use super::EstimatorConfig;
use crate::error::{invalid, Error, Result};
use crate::poly_approx::{
    best_poly_approx, best_poly_approx_anchored, Interval, PolynomialApprox, Target,
};

/// A `2n` sample split into its first and second halves.
#[derive(Debug, Clone)]
pub struct SplitSample {
    n: usize,
    first: Vec<u32>,
    second: Vec<u32>,
    /// symbol -> (N'_x, N_x)
    counts: BTreeMap<u32, (u64, u64)>,
}

impl SplitSample {
    /// Splits an even-length sample into its prefix and suffix halves.
    pub fn new(samples: &[u32]) -> Result<Self> {
        if !samples.len().is_multiple_of(2) {
            return invalid(format!(
                "split estimators need an even number of samples, got {}",
                samples.len()
            ));
        }
        let (a, b) = samples.split_at(samples.len() / 2);
        Self::from_halves(a.to_vec(), b.to_vec())
    }

    pub fn from_halves(first: Vec<u32>, second: Vec<u32>) -> Result<Self> {
        if first.len() != second.len() || first.is_empty() {
            return invalid("halves must be nonempty and of equal length");
        }
        let mut counts: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for &x in &first {
            counts.entry(x).or_default().0 += 1;
        }
        for &x in &second {
            counts.entry(x).or_default().1 += 1;
        }
        Ok(Self {
            n: first.len(),
            first,
            second,
            counts,
        })
    }

    /// Length of each half.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn first_half(&self) -> &[u32] {
        &self.first
    }

    pub fn second_half(&self) -> &[u32] {
        &self.second
    }

    /// `(N'_x, N_x)` for a symbol (zeros when unseen).
    pub fn counts(&self, symbol: u32) -> (u64, u64) {
        self.counts.get(&symbol).copied().unwrap_or((0, 0))
    }

    /// Symbols seen in either half with their count pairs, in symbol order.
    pub fn observed(&self) -> impl Iterator<Item = (u32, (u64, u64))> + '_ {
        self.counts.iter().map(|(&x, &c)| (x, c))
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn max_symbol(&self) -> Option<u32> {
        self.counts.keys().next_back().copied()
    }
}

/// Branch rule deciding how a symbol's `(N'_x, N_x)` is turned into an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SplitRule {
    /// Polynomial branch when `N'_x < first` and `N_x < second`; zero when
    /// only the first test passes; empirical otherwise.
    Counts { first: f64, second: f64 },
    /// Same three branches, decided by `|N'_x/n - center| < first` and
    /// `|N_x/n - center| < second`.
    Deviation {
        center: f64,
        first: f64,
        second: f64,
    },
}

/// A configured split-sample estimator for a fixed half size `n`.
#[derive(Debug, Clone, Serialize)]
pub struct SplitEstimator {
    n: usize,
    alphabet: usize,
    target: Target,
    approx: PolynomialApprox,
    rule: SplitRule,
    /// Added to the empirical branch.
    bias_correction: f64,
    f_max: f64,
    /// Right end of the small-probability range, `c1 ln n / n`.
    small_range: f64,
}

impl SplitEstimator {
    /// Entropy (nats) over an alphabet of at most `k` symbols, from halves of size `n`.
    pub fn entropy(n: usize, k: usize, cfg: &EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        if n < 2 || k < 2 {
            return invalid(format!(
                "entropy estimator needs n >= 2 and k >= 2, got n={n}, k={k}"
            ));
        }
        let ln_n = (n as f64).ln();
        if cfg.c2 * ln_n < 1.0 {
            return Err(Error::SampleTooSmall(format!(
                "c2 ln n = {:.3} < 1 at n = {n}",
                cfg.c2 * ln_n
            )));
        }
        let small_range = cfg.c1 * ln_n / n as f64;
        let degree = cfg.degree(n);
        let approx = best_poly_approx_anchored(
            Target::NegYLogY,
            Interval::new(0.0, small_range.min(1.0))?,
            degree,
        )?;
        Ok(Self {
            n,
            alphabet: k,
            target: Target::NegYLogY,
            approx,
            rule: SplitRule::Counts {
                first: cfg.c2 * ln_n,
                second: cfg.c1 * ln_n,
            },
            bias_correction: 1.0 / (2.0 * n as f64),
            f_max: (k as f64).ln(),
            small_range,
        })
    }

    /// L1 distance to uniform over the alphabet `0..k`, from halves of size `n`.
    ///
    /// Uses the count-threshold rule when `1/k < c2 ln n / n` and the
    /// deviation rule around `1/k` otherwise. The empirical branch carries no
    /// bias correction.
    pub fn distance_to_uniform(n: usize, k: usize, cfg: &EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        if k == 0 {
            return invalid("distance to uniformity needs k >= 1");
        }
        if n < 2 {
            return invalid(format!(
                "distance-to-uniformity estimator needs n >= 2, got {n}"
            ));
        }
        let ln_n = (n as f64).ln();
        let nf = n as f64;
        let kf = k as f64;
        let center = 1.0 / kf;
        let target = Target::AbsShift { c: center };
        let degree = cfg.degree(n);
        let small_range = cfg.c1 * ln_n / nf;
        let (rule, interval) = if center < cfg.c2 * ln_n / nf {
            (
                SplitRule::Counts {
                    first: cfg.c2 * ln_n,
                    second: cfg.c1 * ln_n,
                },
                Interval::new(0.0, small_range.min(1.0))?,
            )
        } else {
            let first = (cfg.c2 * ln_n / (kf * nf)).sqrt();
            let second = (cfg.c1 * ln_n / (kf * nf)).sqrt();
            (
                SplitRule::Deviation {
                    center,
                    first,
                    second,
                },
                Interval::new((center - second).max(0.0), (center + second).min(1.0))?,
            )
        };
        let approx = best_poly_approx(target, interval, degree)?;
        Ok(Self {
            n,
            alphabet: k,
            target,
            approx,
            rule,
            bias_correction: 0.0,
            f_max: 2.0,
            small_range,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn approx(&self) -> &PolynomialApprox {
        &self.approx
    }

    pub fn rule(&self) -> SplitRule {
        self.rule
    }

    pub fn degree(&self) -> usize {
        self.approx.degree
    }

    /// Per-symbol estimate `g_x` from its first- and second-half counts.
    pub fn contribution(&self, first: u64, second: u64) -> f64 {
        let n = self.n as f64;
        let (small_first, small_second) = match self.rule {
            SplitRule::Counts {
                first: t1,
                second: t2,
            } => ((first as f64) < t1, (second as f64) < t2),
            SplitRule::Deviation {
                center,
                first: t1,
                second: t2,
            } => (
                (first as f64 / n - center).abs() < t1,
                (second as f64 / n - center).abs() < t2,
            ),
        };
        match (small_first, small_second) {
            (true, true) => self
                .approx
                .falling_factorial_estimate(second, self.n as u64),
            (true, false) => 0.0,
            (false, _) => self.target.eval(second as f64 / n) + self.bias_correction,
        }
    }

    fn check(&self, split: &SplitSample) -> Result<()> {
        if split.n() != self.n {
            return invalid(format!(
                "estimator configured for halves of {} but sample halves have {}",
                self.n,
                split.n()
            ));
        }
        match (self.target, split.max_symbol()) {
            (Target::AbsShift { .. }, Some(max)) if max as usize >= self.alphabet => {
                invalid(format!(
                    "symbol {max} lies outside the declared alphabet 0..{}",
                    self.alphabet
                ))
            }
            _ => Ok(()),
        }
    }

    /// `sum_x g_x` over the alphabet before clamping. Unseen alphabet symbols
    /// contribute `g_x(0, 0)` each.
    pub fn raw_sum(&self, split: &SplitSample) -> Result<f64> {
        self.check(split)?;
        let mut pairs: Vec<(u64, u64)> = split.observed().map(|(_, c)| c).collect();
        pairs.sort_unstable();
        let seen: f64 = pairs.iter().map(|&(a, b)| self.contribution(a, b)).sum();
        let unseen = self.alphabet.saturating_sub(split.distinct()) as f64;
        Ok(seen + unseen * self.contribution(0, 0))
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.min(self.f_max).max(0.0)
    }

    pub fn estimate(&self, split: &SplitSample) -> Result<f64> {
        Ok(self.clamp(self.raw_sum(split)?))
    }

    /// `n max_i |g(i/n) - g((i-1)/n)|`.
    pub fn lipschitz_constant(&self) -> f64 {
        let n = self.n as f64;
        let g = |i: usize| self.target.eval(i as f64 / n);
        (1..=self.n).fold(0.0f64, |m, i| m.max((g(i) - g(i - 1)).abs())) * n
    }

    /// Upper bound on the change of the estimate when one sample is replaced:
    /// `8 max(e^{L^2/n} max|b_i|, L_g/n, g(c1 ln n / n), g_n)`.
    pub fn bounded_difference_bound(&self) -> f64 {
        let n = self.n as f64;
        let l = self.approx.degree as f64;
        let coeff_term = (l * l / n).exp() * self.approx.max_abs_coeff();
        let terms = [
            coeff_term,
            self.lipschitz_constant() / n,
            self.target.eval(self.small_range),
            self.bias_correction,
        ];
        8.0 * terms.into_iter().fold(0.0, f64::max)
    }

    /// Largest change of the clamped estimate over every single-position
    /// replacement: each position of either half, replaced by each symbol of
    /// `replacements`.
    ///
    /// Positions holding the same symbol in the same half are equivalent, so
    /// the scan runs over (half, symbol) pairs and uses per-symbol deltas of
    /// the additive sum.
    pub fn max_single_swap_change(&self, split: &SplitSample, replacements: &[u32]) -> Result<f64> {
        let total = self.raw_sum(split)?;
        let base = self.clamp(total);
        let mut worst = 0.0f64;
        for half in [0usize, 1] {
            let held: Vec<(u32, (u64, u64))> = split
                .observed()
                .filter(|(_, c)| if half == 0 { c.0 > 0 } else { c.1 > 0 })
                .collect();
            let gains: Vec<(u32, f64)> = replacements
                .iter()
                .map(|&b| {
                    let (c1, c2) = split.counts(b);
                    let after = if half == 0 {
                        self.contribution(c1 + 1, c2)
                    } else {
                        self.contribution(c1, c2 + 1)
                    };
                    (b, after - self.contribution(c1, c2))
                })
                .collect();
            for (a, (c1, c2)) in held {
                let after = if half == 0 {
                    self.contribution(c1 - 1, c2)
                } else {
                    self.contribution(c1, c2 - 1)
                };
                let loss = after - self.contribution(c1, c2);
                for &(b, gain) in &gains {
                    if b == a {
                        continue;
                    }
                    let changed = self.clamp(total + loss + gain);
                    worst = worst.max((changed - base).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Split-sample entropy estimate (nats) for an alphabet of at most `k` symbols.
pub fn entropy_estimate(split: &SplitSample, k: usize, cfg: &EstimatorConfig) -> Result<f64> {
    SplitEstimator::entropy(split.n(), k, cfg)?.estimate(split)
}

/// Split-sample estimate of the L1 distance to uniform over `0..k`.
pub fn dtu_estimate(split: &SplitSample, k: usize, cfg: &EstimatorConfig) -> Result<f64> {
    SplitEstimator::distance_to_uniform(split.n(), k, cfg)?.estimate(split)
}
