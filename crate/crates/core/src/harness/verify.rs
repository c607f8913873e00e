//! Exhaustive check, on binary alphabets, that the PML plug-in inherits the
//! accuracy of any profile-based estimator up to a factor `|Phi^n|` in the
//! failure probability (`|Phi^n| / beta` for `beta`-approximate PML).
//!
//! For a reference estimator `f_hat` defined on profiles, `delta` is the
//! largest failure probability `Pr_p[|f(p) - f_hat(phi)| > epsilon]` over the
//! probability grid, the PML distributions and the approximate candidates.
//! The check is that `Pr_p[|f(p) - f(p_phi)| > 2 epsilon] <= delta |Phi^n|`
//! at every grid point.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteDistribution, PropertyKind};
use crate::error::{invalid, Error, Result};
use crate::pml::pml_exact_tiny;
use crate::profiles::{enumerate_profiles, extract_profile, profile_probability, Profile};

/// Largest sample size accepted by [`verify_ml_metatheorem`].
pub const MAX_VERIFY_N: usize = 7;

/// Slack for comparing probabilities accumulated in different orders.
const SUM_TOL: f64 = 1e-12;

/// The profile-based estimator whose failure probability defines `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceEstimator {
    /// `f_hat(phi) = f(p_phi)` with the exact tiny PML.
    PmlPlugin,
    /// Explicit values per profile.
    Table { values: Vec<(Profile, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub k: usize,
    pub n: usize,
    pub property: PropertyKind,
    pub epsilons: Vec<f64>,
    /// Spacing of the probability grid `p = (q, 1 - q)`.
    pub grid_step: f64,
    pub betas: Vec<f64>,
    /// Spacing of the grid searched for `beta`-approximate candidates.
    pub candidate_step: f64,
    pub reference: ReferenceEstimator,
}

impl VerifyOptions {
    pub fn entropy(n: usize, epsilons: Vec<f64>, grid_step: f64, betas: Vec<f64>) -> Self {
        Self {
            k: 2,
            n,
            property: PropertyKind::Entropy,
            epsilons,
            grid_step,
            betas,
            candidate_step: 0.005,
            reference: ReferenceEstimator::PmlPlugin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointCheck {
    /// `p = (q, 1 - q)`.
    pub q: f64,
    pub property: f64,
    /// Failure probability of the reference estimator at accuracy epsilon.
    pub delta_p: f64,
    /// `Pr_p[|f(p) - f(p_phi)| > 2 epsilon]`.
    pub pml_failure: f64,
    /// The two quantities above recomputed by enumerating all `k^n` sequences.
    pub delta_p_enumerated: f64,
    pub pml_failure_enumerated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaCheck {
    pub beta: f64,
    pub bound: f64,
    /// Largest `Pr_p[|f(p) - f(p~_phi)| > 2 epsilon]` over the grid.
    pub max_failure: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonCheck {
    pub epsilon: f64,
    /// Largest reference failure probability over the class points.
    pub delta: f64,
    /// `delta * |Phi^n|`.
    pub bound: f64,
    pub max_pml_failure: f64,
    pub holds: bool,
    pub points: Vec<GridPointCheck>,
    pub betas: Vec<BetaCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePml {
    pub profile: Profile,
    pub pml_probs: Vec<f64>,
    pub pml_likelihood: f64,
    pub pml_property: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetatheoremReport {
    pub k: usize,
    pub n: usize,
    pub num_profiles: usize,
    /// PML of every profile realizable on `k` symbols.
    pub pml: Vec<ProfilePml>,
    pub epsilons: Vec<EpsilonCheck>,
    /// Largest disagreement between the profile-sum and sequence-enumeration paths.
    pub max_path_discrepancy: f64,
    pub holds: bool,
}

fn binary(q: f64) -> Result<DiscreteDistribution> {
    DiscreteDistribution::new(vec![q, 1.0 - q])
}

fn grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return invalid(format!("grid step must lie in (0, 1], got {step}"));
    }
    let cells = (1.0 / step).round();
    if (cells * step - 1.0).abs() > 1e-9 {
        return invalid(format!("grid step {step} does not divide 1"));
    }
    let cells = cells as usize;
    Ok((0..=cells).map(|i| i as f64 / cells as f64).collect())
}

/// Sum of `p(phi)` over profiles where `fails(phi)`, through closed-form profile probabilities.
fn failure_by_profiles(
    dist: &DiscreteDistribution,
    profiles: &[Profile],
    fails: impl Fn(usize) -> bool,
) -> f64 {
    profiles
        .iter()
        .enumerate()
        .filter(|&(i, _)| fails(i))
        .fold(0.0, |acc, (_, phi)| acc + profile_probability(dist, phi))
}

/// Same sum accumulated sequence by sequence over all `k^n` samples.
fn failure_by_sequences(
    probs: &[f64],
    n: usize,
    index: &HashMap<Profile, usize>,
    fails: impl Fn(usize) -> bool,
) -> Result<f64> {
    let k = probs.len();
    let mut seq = vec![0u32; n];
    let mut total = 0.0;
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        let mut pr = 1.0;
        for slot in seq.iter_mut() {
            *slot = (c % k) as u32;
            pr *= probs[c % k];
            c /= k;
        }
        if pr == 0.0 {
            continue;
        }
        let phi = extract_profile(&seq)?;
        if fails(index[&phi]) {
            total += pr;
        }
    }
    Ok(total)
}

/// Exhaustively checks the competitiveness bound of the PML plug-in (and of
/// `beta`-approximate PML) on all grid distributions over two symbols.
pub fn verify_ml_metatheorem(opts: &VerifyOptions) -> Result<MetatheoremReport> {
    if opts.k != 2 {
        return invalid(format!(
            "exhaustive verification supports k = 2, got {}",
            opts.k
        ));
    }
    if opts.n == 0 || opts.n > MAX_VERIFY_N {
        return Err(Error::OutOfGuard {
            what: "sample size",
            value: opts.n,
            range: format!("1..={MAX_VERIFY_N}"),
        });
    }
    if opts.epsilons.iter().any(|&e| !(e > 0.0)) || opts.epsilons.is_empty() {
        return invalid("epsilons must be positive and nonempty");
    }
    if opts.betas.iter().any(|&b| !(b > 0.0 && b <= 1.0)) {
        return invalid("betas must lie in (0, 1]");
    }
    let f = |d: &DiscreteDistribution| d.true_property(opts.property);
    let points = grid(opts.grid_step)?;
    let candidate_grid = grid(opts.candidate_step)?;
    let profiles = enumerate_profiles(opts.n)?;
    let index: HashMap<Profile, usize> = profiles
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();

    // PML and its property for every profile realizable on two symbols.
    let mut pml: Vec<Option<ProfilePml>> = Vec::with_capacity(profiles.len());
    for phi in &profiles {
        if phi.parts() > opts.k {
            pml.push(None);
            continue;
        }
        let r = pml_exact_tiny(phi, opts.k)?;
        pml.push(Some(ProfilePml {
            profile: phi.clone(),
            pml_probs: r.dist.probs().to_vec(),
            pml_likelihood: r.likelihood(),
            pml_property: f(&r.dist)?,
        }));
    }
    let pml_q = |i: usize| pml[i].as_ref().map(|p| p.pml_probs[0]);

    let reference: Vec<Option<f64>> = match &opts.reference {
        ReferenceEstimator::PmlPlugin => pml
            .iter()
            .map(|p| p.as_ref().map(|p| p.pml_property))
            .collect(),
        ReferenceEstimator::Table { values } => {
            let table: HashMap<&Profile, f64> = values.iter().map(|(p, v)| (p, *v)).collect();
            let mut out = Vec::with_capacity(profiles.len());
            for (phi, p) in profiles.iter().zip(&pml) {
                match (p, table.get(phi)) {
                    (None, _) => out.push(None),
                    (Some(_), Some(&v)) => out.push(Some(v)),
                    (Some(_), None) => {
                        return invalid(format!("reference table has no value for profile {phi}"))
                    }
                }
            }
            out
        }
    };

    // beta-approximate candidates: among candidate-grid points whose likelihood
    // is at least beta times the PML likelihood, the one farthest in property.
    let mut candidates: Vec<Vec<Option<f64>>> = Vec::with_capacity(opts.betas.len());
    for &beta in &opts.betas {
        let mut per_profile = Vec::with_capacity(profiles.len());
        for (i, phi) in profiles.iter().enumerate() {
            let Some(p) = &pml[i] else {
                per_profile.push(None);
                continue;
            };
            let mut best = (0.0, p.pml_probs[0]);
            if beta < 1.0 {
                for &q in &candidate_grid {
                    let d = binary(q)?;
                    if profile_probability(&d, phi) >= beta * p.pml_likelihood * (1.0 - SUM_TOL) {
                        let gap = (f(&d)? - p.pml_property).abs();
                        if gap > best.0 {
                            best = (gap, q);
                        }
                    }
                }
            }
            per_profile.push(Some(best.1));
        }
        candidates.push(per_profile);
    }
    let candidate_property: Vec<Vec<Option<f64>>> = candidates
        .iter()
        .map(|row| {
            row.iter()
                .map(|q| q.map(|q| binary(q).and_then(|d| f(&d))).transpose())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    // every distribution the argument needs delta at
    let mut class: Vec<f64> = points.clone();
    class.extend((0..profiles.len()).filter_map(pml_q));
    class.extend(candidates.iter().flatten().flatten().copied());

    let mut max_disc = 0.0f64;
    let mut eps_checks = Vec::with_capacity(opts.epsilons.len());
    for &eps in &opts.epsilons {
        let reference = &reference;
        let reference_fails =
            |fp: f64| move |i: usize| reference[i].is_some_and(|v| (fp - v).abs() > eps);
        let mut delta = 0.0f64;
        for &q in &class {
            let d = binary(q)?;
            delta = delta.max(failure_by_profiles(&d, &profiles, reference_fails(f(&d)?)));
        }
        let bound = delta * profiles.len() as f64;

        let mut checks = Vec::with_capacity(points.len());
        let mut beta_max = vec![0.0f64; opts.betas.len()];
        for &q in &points {
            let d = binary(q)?;
            let fp = f(&d)?;
            let pml_fails = |i: usize| {
                pml[i]
                    .as_ref()
                    .is_some_and(|p| (fp - p.pml_property).abs() > 2.0 * eps)
            };
            let delta_p = failure_by_profiles(&d, &profiles, reference_fails(fp));
            let pml_failure = failure_by_profiles(&d, &profiles, pml_fails);
            let delta_p_enumerated =
                failure_by_sequences(d.probs(), opts.n, &index, reference_fails(fp))?;
            let pml_failure_enumerated =
                failure_by_sequences(d.probs(), opts.n, &index, pml_fails)?;
            max_disc = max_disc
                .max((delta_p - delta_p_enumerated).abs())
                .max((pml_failure - pml_failure_enumerated).abs());
            for (b, props) in candidate_property.iter().enumerate() {
                let fails = |i: usize| props[i].is_some_and(|v| (fp - v).abs() > 2.0 * eps);
                beta_max[b] = beta_max[b].max(failure_by_profiles(&d, &profiles, fails));
            }
            checks.push(GridPointCheck {
                q,
                property: fp,
                delta_p,
                pml_failure,
                delta_p_enumerated,
                pml_failure_enumerated,
            });
        }
        let max_pml_failure = checks.iter().map(|c| c.pml_failure).fold(0.0, f64::max);
        let betas: Vec<BetaCheck> = opts
            .betas
            .iter()
            .zip(&beta_max)
            .map(|(&beta, &max_failure)| {
                let bound = bound / beta;
                BetaCheck {
                    beta,
                    bound,
                    max_failure,
                    holds: max_failure <= bound + SUM_TOL,
                }
            })
            .collect();
        let holds = max_pml_failure <= bound + SUM_TOL && betas.iter().all(|b| b.holds);
        eps_checks.push(EpsilonCheck {
            epsilon: eps,
            delta,
            bound,
            max_pml_failure,
            holds,
            points: checks,
            betas,
        });
    }

    let holds = eps_checks.iter().all(|e| e.holds);
    Ok(MetatheoremReport {
        k: opts.k,
        n: opts.n,
        num_profiles: profiles.len(),
        pml: pml.into_iter().flatten().collect(),
        epsilons: eps_checks,
        max_path_discrepancy: max_disc,
        holds,
    })
}
