use std::hash::Hash;

use crate::distributions::{distance_to_uniform_of, entropy_of, support_coverage_of, PropertyKind};
use crate::error::{invalid, Result};
use crate::profiles::extract_profile;

/// Property of the empirical distribution of `samples`.
///
/// The empirical probabilities are taken in ascending order of multiplicity,
/// so the result depends on the sample only through its profile.
pub fn sml_plugin<T: Eq + Hash>(samples: &[T], kind: PropertyKind) -> Result<f64> {
    let profile = extract_profile(samples)?;
    let n = samples.len() as f64;
    let probs: Vec<f64> = profile
        .multiplicities()
        .iter()
        .map(|&c| c as f64 / n)
        .collect();
    match kind {
        PropertyKind::Entropy => Ok(entropy_of(&probs)),
        PropertyKind::SupportSize => Ok(probs.len() as f64),
        PropertyKind::SupportCoverage { m } => {
            if m == 0 {
                return invalid("support coverage horizon m must be positive");
            }
            Ok(support_coverage_of(&probs, m))
        }
        PropertyKind::DistanceToUniform { k } => {
            if probs.len() > k {
                return invalid(format!(
                    "{} distinct symbols observed but the declared alphabet has {k}",
                    probs.len()
                ));
            }
            Ok(distance_to_uniform_of(&probs, k))
        }
    }
}
