//! Estimation of symmetric properties (entropy, support size, support
//! coverage, distance to uniformity) of discrete distributions from samples.
//!
//! The crate provides the profile maximum likelihood (PML) plug-in estimator,
//! split-sample polynomial-approximation estimators, the smoothed
//! Good–Toulmin coverage and support estimators, and a harness that checks
//! the maximum-likelihood competitiveness bounds exhaustively on small
//! instances.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod pml;
pub mod poly_approx;
pub mod profiles;
pub mod seeding;

pub use distributions::{DiscreteDistribution, DistSpec, LogBase, PropertyKind};
pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, Mode, SplitSample};
pub use poly_approx::{Interval, PolynomialApprox, Target};
pub use profiles::{Prevalence, Profile};
