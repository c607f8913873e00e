//! Experiment orchestration, exhaustive checks of the maximum-likelihood
//! competitiveness bounds, and bounded-difference probes.

mod experiment;
mod probe;
mod verify;

pub use experiment::{
    property_label, run_experiment, trial_seed, Aggregate, EstimatorKind, ExperimentConfig,
    ExperimentReport, TrialRecord,
};
pub use probe::{bounded_difference_probe, EXHAUSTIVE_PROBE_LIMIT};
pub use verify::{
    verify_ml_metatheorem, BetaCheck, GridPointCheck, MetatheoremReport, ReferenceEstimator,
    VerifyOptions,
};

use crate::error::{Error, Result};

/// Environment variable capping the worker threads (`0` or unset: one per core).
pub const THREADS_ENV: &str = "SYMPROP_THREADS";

/// Thread pool sized by [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse::<usize>().map_err(|_| {
            Error::InvalidArgument(format!(
                "{THREADS_ENV} must be a nonnegative integer, got `{v}`"
            ))
        })?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start thread pool: {e}")))
}
