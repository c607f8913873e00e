//! Seeded Monte-Carlo sweeps comparing estimators against exact property values.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteDistribution, DistSpec, PropertyKind};
use crate::error::{invalid, Error, Result};
use crate::estimators::{
    sml_plugin, support_coverage_estimate, support_estimate, EstimatorConfig, Mode, SplitEstimator,
    SplitSample,
};
use crate::pml::{pml_plugin, PmlSettings, MAX_PML_N};
use crate::seeding::{derive_seed, label_tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Empirical plug-in.
    Sml,
    /// Split-sample polynomial estimator (entropy, distance to uniformity).
    Poly,
    /// PML plug-in.
    Pml,
    /// Smoothed Good–Toulmin (support coverage, support size).
    Gt,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Sml => "sml",
            EstimatorKind::Poly => "poly",
            EstimatorKind::Pml => "pml",
            EstimatorKind::Gt => "gt",
        }
    }

    pub fn supports(self, kind: PropertyKind) -> bool {
        match self {
            EstimatorKind::Sml | EstimatorKind::Pml => true,
            EstimatorKind::Poly => matches!(
                kind,
                PropertyKind::Entropy | PropertyKind::DistanceToUniform { .. }
            ),
            EstimatorKind::Gt => matches!(
                kind,
                PropertyKind::SupportSize | PropertyKind::SupportCoverage { .. }
            ),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sml" => Ok(EstimatorKind::Sml),
            "poly" => Ok(EstimatorKind::Poly),
            "pml" => Ok(EstimatorKind::Pml),
            "gt" => Ok(EstimatorKind::Gt),
            _ => invalid(format!("unknown estimator `{s}`")),
        }
    }
}

/// Short label used in reports: `entropy`, `support`, `coverage(m=..)`, `dtu(k=..)`.
pub fn property_label(kind: PropertyKind) -> String {
    match kind {
        PropertyKind::Entropy => "entropy".into(),
        PropertyKind::SupportSize => "support".into(),
        PropertyKind::SupportCoverage { m } => format!("coverage(m={m})"),
        PropertyKind::DistanceToUniform { k } => format!("dtu(k={k})"),
    }
}

/// A Monte-Carlo sweep. Sample sizes in `n_grid` are total sample counts;
/// split-sample estimators use the two halves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `uniform:k`, `zipf:k:s`, `twostep:k:ratio` or `point:k`.
    pub dist_spec: String,
    pub property: PropertyKind,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub master_seed: u64,
    pub epsilon: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub pml: Option<PmlSettings>,
    /// Adds wall-clock runtimes to the report (which makes it nondeterministic).
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dist(&self) -> Result<DistSpec> {
        self.dist_spec.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.dist()?;
        spec.build()?;
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return invalid("n_grid must be nonempty with positive sizes");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("n_grid must be strictly increasing");
        }
        if self.estimators.is_empty() {
            return invalid("at least one estimator is required");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        for &e in &self.estimators {
            if !e.supports(self.property) {
                return invalid(format!(
                    "estimator `{e}` does not apply to {}",
                    property_label(self.property)
                ));
            }
        }
        match self.property {
            PropertyKind::SupportCoverage { m: 0 } => {
                return invalid("support coverage horizon m must be positive")
            }
            PropertyKind::DistanceToUniform { k } if k < spec.k() => {
                return invalid(format!(
                    "distribution has {} symbols, more than the declared alphabet {k}",
                    spec.k()
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub estimator: EstimatorKind,
    pub property: String,
    pub dist: String,
    pub n: usize,
    pub trial: usize,
    pub estimate: Option<f64>,
    pub truth: f64,
    pub abs_error: Option<f64>,
    pub seed: u64,
    /// `ok`, or the error that made the trial fail.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub completed: usize,
    pub failed: usize,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    /// Fraction of completed trials with error above epsilon.
    pub prob_error_above_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Exact property value reported alongside each estimate.
    pub truth: f64,
    pub aggregates: Vec<Aggregate>,
    pub trials: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub fn aggregate(&self, estimator: EstimatorKind, n: usize) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.estimator == estimator && a.n == n)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for t in &self.trials {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Normalization applied to reported values: support sizes are reported as
/// fractions of the alphabet and coverages as fractions of the horizon.
fn scale(kind: PropertyKind, k: usize) -> f64 {
    match kind {
        PropertyKind::SupportSize => 1.0 / k as f64,
        PropertyKind::SupportCoverage { m } => 1.0 / m as f64,
        _ => 1.0,
    }
}

/// Everything shared by the trials of one (estimator, n) cell.
enum Prepared {
    Split(Box<SplitEstimator>),
    Plain,
    Unavailable(String),
}

struct Cell<'a> {
    cfg: &'a ExperimentConfig,
    kind: EstimatorKind,
    k: usize,
    est_cfg: EstimatorConfig,
    prepared: Prepared,
}

impl Cell<'_> {
    fn estimate(&self, samples: &[u32], seed: u64) -> Result<f64> {
        let property = self.cfg.property;
        let raw = match (&self.prepared, self.kind) {
            (Prepared::Unavailable(msg), _) => return invalid(msg.clone()),
            (Prepared::Split(est), _) => est.estimate(&SplitSample::new(samples)?)?,
            (Prepared::Plain, EstimatorKind::Sml) => sml_plugin(samples, property)?,
            (Prepared::Plain, EstimatorKind::Pml) => {
                let mut settings = self.cfg.pml.clone().unwrap_or_default();
                settings.seed = derive_seed(seed, &[settings.seed]);
                pml_plugin(samples, property, &settings)?
            }
            (Prepared::Plain, EstimatorKind::Gt) => match property {
                // already a fraction of k
                PropertyKind::SupportSize => {
                    return support_estimate(samples, self.k, self.est_cfg.epsilon)
                }
                PropertyKind::SupportCoverage { m } => {
                    support_coverage_estimate(samples, m, &self.est_cfg)?
                }
                _ => unreachable!("validated"),
            },
            (Prepared::Plain, EstimatorKind::Poly) => unreachable!("poly is always split"),
        };
        Ok(raw * scale(property, self.k))
    }
}

fn prepare(
    cfg: &ExperimentConfig,
    kind: EstimatorKind,
    n: usize,
    k: usize,
    est_cfg: &EstimatorConfig,
) -> Prepared {
    match kind {
        EstimatorKind::Poly => {
            if !n.is_multiple_of(2) {
                return Prepared::Unavailable(format!("split estimators need even n, got {n}"));
            }
            let built = match cfg.property {
                PropertyKind::Entropy => SplitEstimator::entropy(n / 2, k, est_cfg),
                PropertyKind::DistanceToUniform { k } => {
                    SplitEstimator::distance_to_uniform(n / 2, k, est_cfg)
                }
                _ => unreachable!("validated"),
            };
            match built {
                Ok(est) => Prepared::Split(Box::new(est)),
                Err(e) => Prepared::Unavailable(e.to_string()),
            }
        }
        EstimatorKind::Pml if n > MAX_PML_N => {
            Prepared::Unavailable(format!("PML plug-in needs n <= {MAX_PML_N}, got {n}"))
        }
        _ => Prepared::Plain,
    }
}

/// Seed of one trial: a pure function of the master seed, the estimator, the
/// sample size and the trial index.
pub fn trial_seed(master: u64, estimator: EstimatorKind, n: usize, trial: usize) -> u64 {
    derive_seed(
        master,
        &[label_tag(estimator.label()), n as u64, trial as u64],
    )
}

/// Runs the sweep. Failing trials are recorded with their error and excluded
/// from the aggregates. Apart from optional timings, the report is a pure
/// function of the configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let spec = cfg.dist()?;
    let dist: DiscreteDistribution = spec.build()?;
    let k = spec.k();
    let truth = dist.true_property(cfg.property)? * scale(cfg.property, k);
    let est_cfg = EstimatorConfig::for_mode(cfg.mode).with_epsilon(cfg.epsilon);
    let property = property_label(cfg.property);
    let dist_label = spec.to_string();

    let pool = super::thread_pool()?;
    let mut trials = Vec::new();
    let mut aggregates = Vec::new();
    for &kind in &cfg.estimators {
        for &n in &cfg.n_grid {
            let start = Instant::now();
            let cell = Cell {
                cfg,
                kind,
                k,
                est_cfg,
                prepared: prepare(cfg, kind, n, k, &est_cfg),
            };
            let records: Vec<TrialRecord> = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|trial| {
                        let seed = trial_seed(cfg.master_seed, kind, n, trial);
                        let samples = dist.sample(n, seed);
                        let result = cell.estimate(&samples, seed);
                        let (estimate, status) = match result {
                            Ok(v) => (Some(v), "ok".to_string()),
                            Err(e) => (None, e.to_string()),
                        };
                        TrialRecord {
                            estimator: kind,
                            property: property.clone(),
                            dist: dist_label.clone(),
                            n,
                            trial,
                            estimate,
                            truth,
                            abs_error: estimate.map(|v| (v - truth).abs()),
                            seed,
                            status,
                        }
                    })
                    .collect()
            });
            let errors: Vec<f64> = records.iter().filter_map(|r| r.abs_error).collect();
            let completed = errors.len();
            let mean = |f: &dyn Fn(f64) -> f64| {
                (completed > 0)
                    .then(|| errors.iter().map(|&e| f(e)).sum::<f64>() / completed as f64)
            };
            aggregates.push(Aggregate {
                estimator: kind,
                n,
                completed,
                failed: records.len() - completed,
                mae: mean(&|e| e),
                rmse: mean(&|e| e * e).map(f64::sqrt),
                prob_error_above_epsilon: mean(&|e| if e > cfg.epsilon { 1.0 } else { 0.0 }),
                runtime_secs: cfg.record_timing.then(|| start.elapsed().as_secs_f64()),
            });
            trials.extend(records);
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        truth,
        aggregates,
        trials,
    })
}
