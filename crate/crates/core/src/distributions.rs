//! Finite discrete distributions: construction, i.i.d. sampling and exact
//! evaluation of the four symmetric properties.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability vector over the dense alphabet `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support_labels: Option<Vec<u32>>,
}

/// The symmetric properties this crate estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropertyKind {
    Entropy,
    SupportSize,
    /// Expected number of distinct symbols in `m` fresh samples.
    SupportCoverage {
        m: u64,
    },
    /// L1 distance to the uniform distribution over an alphabet of size `k`.
    DistanceToUniform {
        k: usize,
    },
}

/// Logarithm base used when reporting entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    /// Converts a value in nats to this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Nats => nats,
            LogBase::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

impl DiscreteDistribution {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution(
                "empty probability vector".into(),
            ));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "probabilities must be finite and nonnegative, got {bad}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            probs,
            support_labels: None,
        })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Attaches symbol labels (one per probability entry).
    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.probs.len() {
            return invalid(format!(
                "{} labels for {} probabilities",
                labels.len(),
                self.probs.len()
            ));
        }
        self.support_labels = Some(labels);
        Ok(self)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.support_labels.as_deref()
    }

    /// Alphabet length, including zero-probability symbols.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// The strictly positive probabilities, in alphabet order.
    pub fn positive_probs(&self) -> Vec<f64> {
        self.probs.iter().copied().filter(|&p| p > 0.0).collect()
    }

    /// Draws `n` i.i.d. symbols (dense ids `0..len`). Deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if self.support_size() == 1 {
            let only = self.probs.iter().position(|&p| p > 0.0).unwrap_or(0) as u32;
            return vec![only; n];
        }
        let index = WeightedIndex::new(&self.probs).expect("validated distribution");
        (0..n).map(|_| index.sample(&mut rng) as u32).collect()
    }

    /// Exact property value; entropy is in nats.
    pub fn true_property(&self, kind: PropertyKind) -> Result<f64> {
        match kind {
            PropertyKind::Entropy => Ok(entropy_of(&self.probs)),
            PropertyKind::SupportSize => Ok(self.support_size() as f64),
            PropertyKind::SupportCoverage { m } => {
                if m == 0 {
                    return invalid("support coverage horizon m must be positive");
                }
                Ok(support_coverage_of(&self.probs, m))
            }
            PropertyKind::DistanceToUniform { k } => {
                if k == 0 {
                    return invalid("reference alphabet size k must be positive");
                }
                if self.probs.len() > k {
                    return invalid(format!(
                        "distribution has {} symbols but the reference alphabet has {k}",
                        self.probs.len()
                    ));
                }
                Ok(distance_to_uniform_of(&self.probs, k))
            }
        }
    }
}

/// Shannon entropy in nats with `0 log 0 = 0`.
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .fold(0.0, |h, &p| h - p * p.ln())
}

/// `sum_x 1 - (1 - p(x))^m`.
pub fn support_coverage_of(probs: &[f64], m: u64) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -((m as f64) * (-p).ln_1p()).exp_m1())
        .sum()
}

/// L1 distance to uniform over `k` symbols; entries beyond `probs.len()` are zero.
pub fn distance_to_uniform_of(probs: &[f64], k: usize) -> f64 {
    let u = 1.0 / k as f64;
    let seen: f64 = probs.iter().map(|&p| (p - u).abs()).sum();
    seen + (k - probs.len().min(k)) as f64 * u
}

pub fn make_uniform(k: usize) -> Result<DiscreteDistribution> {
    if k == 0 {
        return invalid("uniform alphabet size must be at least 1");
    }
    DiscreteDistribution::new(vec![1.0 / k as f64; k])
}

/// `p_i ∝ 1 / i^s` for `i = 1..=k`.
pub fn make_zipf(k: usize, s: f64) -> Result<DiscreteDistribution> {
    if k == 0 {
        return invalid("zipf alphabet size must be at least 1");
    }
    if !(s >= 0.0) || !s.is_finite() {
        return invalid(format!(
            "zipf exponent must be finite and nonnegative, got {s}"
        ));
    }
    let weights: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-s)).collect();
    DiscreteDistribution::from_weights(&weights)
}

/// `floor(k/2)` heavy symbols, each `ratio` times as likely as each of the
/// remaining light symbols. `ratio = 1` is uniform.
pub fn make_twostep(k: usize, ratio: f64) -> Result<DiscreteDistribution> {
    if k < 2 {
        return invalid("twostep needs at least 2 symbols");
    }
    if !(ratio > 0.0) || !ratio.is_finite() {
        return invalid(format!("twostep ratio must be positive, got {ratio}"));
    }
    let heavy = k / 2;
    let weights: Vec<f64> = (0..k)
        .map(|i| if i < heavy { ratio } else { 1.0 })
        .collect();
    DiscreteDistribution::from_weights(&weights)
}

/// All mass on symbol 0 of a `k`-symbol alphabet.
pub fn make_point_mass(k: usize) -> Result<DiscreteDistribution> {
    if k == 0 {
        return invalid("point mass alphabet size must be at least 1");
    }
    let mut probs = vec![0.0; k];
    probs[0] = 1.0;
    DiscreteDistribution::new(probs)
}

/// Parsed form of the `uniform:k`, `zipf:k:s`, `twostep:k:ratio` and
/// `point:k` distribution strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    Uniform { k: usize },
    Zipf { k: usize, s: f64 },
    TwoStep { k: usize, ratio: f64 },
    PointMass { k: usize },
}

impl DistSpec {
    pub fn build(&self) -> Result<DiscreteDistribution> {
        match *self {
            DistSpec::Uniform { k } => make_uniform(k),
            DistSpec::Zipf { k, s } => make_zipf(k, s),
            DistSpec::TwoStep { k, ratio } => make_twostep(k, ratio),
            DistSpec::PointMass { k } => make_point_mass(k),
        }
    }

    /// Alphabet size.
    pub fn k(&self) -> usize {
        match *self {
            DistSpec::Uniform { k }
            | DistSpec::Zipf { k, .. }
            | DistSpec::TwoStep { k, .. }
            | DistSpec::PointMass { k } => k,
        }
    }
}

impl FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::InvalidArgument(format!("malformed distribution spec `{s}`"));
        let int = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let real = |t: &str| t.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["uniform", k] => Ok(DistSpec::Uniform { k: int(k)? }),
            ["zipf", k, e] => Ok(DistSpec::Zipf {
                k: int(k)?,
                s: real(e)?,
            }),
            ["twostep", k, r] => Ok(DistSpec::TwoStep {
                k: int(k)?,
                ratio: real(r)?,
            }),
            ["point", k] => Ok(DistSpec::PointMass { k: int(k)? }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistSpec::Uniform { k } => write!(f, "uniform:{k}"),
            DistSpec::Zipf { k, s } => write!(f, "zipf:{k}:{s}"),
            DistSpec::TwoStep { k, ratio } => write!(f, "twostep:{k}:{ratio}"),
            DistSpec::PointMass { k } => write!(f, "point:{k}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_constructors() {
        assert_eq!(make_uniform(2).unwrap().probs(), &[0.5, 0.5]);
        assert!(make_uniform(5).unwrap().probs().iter().all(|&p| p == 0.2));
        assert_eq!(make_uniform(1).unwrap().probs(), &[1.0]);
        assert!(make_uniform(0).is_err());
    }

    #[test]
    fn zipf_hand_normalized() {
        let z = make_zipf(2, 1.0).unwrap();
        assert!((z.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((z.probs()[1] - 1.0 / 3.0).abs() < 1e-15);

        assert_eq!(
            make_zipf(3, 0.0).unwrap().probs(),
            make_uniform(3).unwrap().probs()
        );

        let c = 1.0 / (1.0 + 0.25 + 1.0 / 9.0 + 1.0 / 16.0);
        let expected = [c, c / 4.0, c / 9.0, c / 16.0];
        for (p, e) in make_zipf(4, 2.0).unwrap().probs().iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(DiscreteDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![]).is_err());
    }

    #[test]
    fn point_mass_sampling() {
        let d = DiscreteDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.sample(17, 99), vec![2; 17]);
    }

    #[test]
    fn sampling_is_seeded() {
        let d = make_zipf(50, 1.0).unwrap();
        assert_eq!(d.sample(1000, 7), d.sample(1000, 7));
        assert_ne!(d.sample(1000, 7), d.sample(1000, 8));
    }

    #[test]
    fn law_of_large_numbers() {
        let d = make_uniform(2).unwrap();
        let xs = d.sample(100_000, 2024);
        let zeros = xs.iter().filter(|&&x| x == 0).count() as f64 / xs.len() as f64;
        assert!((zeros - 0.5).abs() < 0.01, "frequency {zeros}");
    }

    #[test]
    fn property_examples() {
        let u = make_uniform(7).unwrap();
        assert!((u.true_property(PropertyKind::Entropy).unwrap() - 7f64.ln()).abs() < 1e-12);

        let pm = make_point_mass(10).unwrap();
        let d = pm
            .true_property(PropertyKind::DistanceToUniform { k: 10 })
            .unwrap();
        assert!((d - 2.0 * (1.0 - 0.1)).abs() < 1e-12);
        assert_eq!(pm.true_property(PropertyKind::Entropy).unwrap(), 0.0);

        let u2 = make_uniform(2).unwrap();
        let s = u2
            .true_property(PropertyKind::SupportCoverage { m: 2 })
            .unwrap();
        assert!((s - 1.5).abs() < 1e-12);
        assert!(u2
            .true_property(PropertyKind::SupportCoverage { m: 0 })
            .is_err());
        assert!(u2
            .true_property(PropertyKind::DistanceToUniform { k: 1 })
            .is_err());
    }

    #[test]
    fn dtu_pads_missing_symbols() {
        let d = make_uniform(2).unwrap();
        // (0.5 - 0.25) * 2 + 0.25 * 2
        let v = d
            .true_property(PropertyKind::DistanceToUniform { k: 4 })
            .unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["uniform:10", "zipf:100:1.5", "twostep:8:4", "point:3"] {
            let spec: DistSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.build().unwrap().len(), spec.k());
        }
        assert!("uniform".parse::<DistSpec>().is_err());
        assert!("zipf:10".parse::<DistSpec>().is_err());
        assert!("normal:3".parse::<DistSpec>().is_err());
    }

    #[test]
    fn twostep_shape() {
        let d = make_twostep(6, 3.0).unwrap();
        // 3 heavy at 3w, 3 light at w, 12w = 1
        assert!((d.probs()[0] - 0.25).abs() < 1e-15);
        assert!((d.probs()[5] - 1.0 / 12.0).abs() < 1e-15);
    }

    fn arb_dist() -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::vec(0.0f64..1.0, 1..12)
            .prop_filter_map("nonzero", |w| DiscreteDistribution::from_weights(&w).ok())
    }

    proptest! {
        #[test]
        fn constructors_normalize(k in 1usize..400, s in 0.0f64..3.0, r in 0.1f64..20.0) {
            for d in [make_uniform(k).unwrap(), make_zipf(k, s).unwrap()] {
                prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < NORMALIZATION_TOL);
            }
            if k >= 2 {
                let d = make_twostep(k, r).unwrap();
                prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < NORMALIZATION_TOL);
            }
        }

        #[test]
        fn entropy_bounds(d in arb_dist()) {
            let h = d.true_property(PropertyKind::Entropy).unwrap();
            let s = d.support_size() as f64;
            prop_assert!(h >= -1e-15);
            prop_assert!(h <= s.ln() + 1e-12);
        }

        #[test]
        fn coverage_bounds_and_monotone(d in arb_dist(), m in 1u64..200) {
            let a = d.true_property(PropertyKind::SupportCoverage { m }).unwrap();
            let b = d.true_property(PropertyKind::SupportCoverage { m: m + 1 }).unwrap();
            let cap = (m as f64).min(d.support_size() as f64);
            prop_assert!(a >= 0.0 && a <= cap + 1e-12);
            prop_assert!(b >= a - 1e-12);
        }

        #[test]
        fn dtu_bounds(d in arb_dist(), extra in 0usize..5) {
            let k = d.len() + extra;
            let v = d.true_property(PropertyKind::DistanceToUniform { k }).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(v <= 2.0 * (1.0 - 1.0 / k as f64) + 1e-12);
        }
    }
}
