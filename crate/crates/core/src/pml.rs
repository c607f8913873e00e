//! Profile maximum likelihood (PML): the distribution maximizing the
//! probability of the observed profile, and the plug-in estimator built on it.
//!
//! The likelihood is evaluated with the same multiplicity-lattice dynamic
//! program as [`crate::profiles::profile_log_probability`], in the linear
//! domain after rescaling the probabilities by the support size. Gradients
//! come from prefix/suffix tables of that program. Maximization is projected
//! gradient ascent on the simplex with backtracking, restarted from uniform,
//! empirical and Dirichlet(1) points for every support size in range.

use std::hash::Hash;
use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteDistribution, PropertyKind};
use crate::error::{invalid, Error, Result};
use crate::profiles::{extract_profile, profile_log_probability, Lattice, Profile};
use crate::seeding::derive_seed;

/// Largest sample size accepted by [`pml_optimize`].
pub const MAX_PML_N: usize = 40;
/// Largest sample size accepted by [`pml_exact_tiny`].
pub const MAX_TINY_N: usize = 10;
/// Largest support accepted by [`pml_exact_tiny`].
pub const MAX_TINY_SUPPORT: usize = 12;
/// Grid denominator of the certification sweep in [`pml_exact_tiny`].
pub const GRID_RESOLUTION: u32 = 64;
pub const DEFAULT_RESTARTS: usize = 50;
/// Relative log-likelihood gap under which a smaller support wins a tie.
pub const TIE_TOLERANCE: f64 = 1e-10;

const CONVERGENCE_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 5000;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-30;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmlResult {
    pub dist: DiscreteDistribution,
    pub log_likelihood: f64,
    /// Likelihood relative to the best found over every start and support size.
    pub beta_empirical: f64,
    /// Inclusive range of support sizes that were searched.
    pub support_size_searched: (usize, usize),
}

impl PmlResult {
    pub fn likelihood(&self) -> f64 {
        self.log_likelihood.exp()
    }

    pub fn support(&self) -> usize {
        self.dist.support_size()
    }
}

/// Solver settings for [`pml_plugin`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmlSettings {
    /// Support sizes to search; `parts..=n + ceil(n/2)` when absent.
    #[serde(default)]
    pub support: Option<(usize, usize)>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for PmlSettings {
    fn default() -> Self {
        Self {
            support: None,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

/// `parts ..= n + ceil(n/2)`.
pub fn default_support_range(profile: &Profile) -> RangeInclusive<usize> {
    let n = profile.n();
    profile.parts()..=n + n.div_ceil(2)
}

struct Objective {
    lattice: Lattice,
    n: usize,
}

impl Objective {
    fn new(profile: &Profile) -> Self {
        Self {
            lattice: Lattice::new(profile),
            n: profile.n(),
        }
    }

    fn powers(&self, q: f64, out: &mut [f64]) {
        for (o, &mu) in out.iter_mut().zip(&self.lattice.values) {
            *o = q.powi(mu as i32);
        }
    }

    fn finish(&self, monomial_sum: f64, support: usize) -> f64 {
        if monomial_sum > 0.0 {
            self.lattice.ln_coefficient + monomial_sum.ln() - self.n as f64 * (support as f64).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_likelihood(&self, p: &[f64]) -> f64 {
        let size = self.lattice.size;
        let scale = p.len() as f64;
        let mut cur = vec![0.0; size];
        let mut next = vec![0.0; size];
        let mut pw = vec![0.0; self.lattice.values.len()];
        cur[0] = 1.0;
        for &px in p {
            self.powers(scale * px, &mut pw);
            self.lattice.fold_symbol(&cur, &mut next, &pw);
            std::mem::swap(&mut cur, &mut next);
        }
        self.finish(cur[self.lattice.full()], p.len())
    }

    fn value_and_gradient(&self, p: &[f64], grad: &mut [f64]) -> f64 {
        let lat = &self.lattice;
        let size = lat.size;
        let dims = lat.values.len();
        let s = p.len();
        let scale = s as f64;
        let mut pw = vec![0.0; dims];

        let mut forward = vec![0.0; (s + 1) * size];
        forward[0] = 1.0;
        for x in 0..s {
            self.powers(scale * p[x], &mut pw);
            let (done, rest) = forward.split_at_mut((x + 1) * size);
            lat.fold_symbol(&done[x * size..], &mut rest[..size], &pw);
        }
        let mut backward = vec![0.0; (s + 1) * size];
        backward[s * size] = 1.0;
        for x in (0..s).rev() {
            self.powers(scale * p[x], &mut pw);
            let (head, tail) = backward.split_at_mut((x + 1) * size);
            lat.fold_symbol(&tail[..size], &mut head[x * size..], &pw);
        }

        let full = lat.full();
        let total = forward[s * size + full];
        let value = self.finish(total, s);
        if !value.is_finite() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return value;
        }
        for x in 0..s {
            let before = &forward[x * size..(x + 1) * size];
            let after = &backward[(x + 1) * size..(x + 2) * size];
            let q = scale * p[x];
            let mut d = 0.0;
            for v in 0..dims {
                let c = full - lat.strides[v];
                let mut conv = 0.0;
                lat.for_each_split(c, |a, b| conv += before[a] * after[b]);
                let mu = lat.values[v] as i32;
                d += mu as f64 * q.powi(mu - 1) * conv;
            }
            grad[x] = scale * d / total;
        }
        value
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Projected gradient ascent with Armijo backtracking. The log-likelihood is
/// nondecreasing along the trajectory.
fn ascend(obj: &Objective, mut p: Vec<f64>) -> (f64, Vec<f64>) {
    let s = p.len();
    let mut grad = vec![0.0; s];
    let mut value = obj.value_and_gradient(&p, &mut grad);
    if !value.is_finite() {
        return (value, p);
    }
    let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if gmax == 0.0 {
        return (value, p);
    }
    let mut step = 1.0 / (gmax * s as f64);
    let mut cand = vec![0.0; s];
    for _ in 0..MAX_ITERATIONS {
        let mut accepted = None;
        while step >= MIN_STEP {
            for ((c, &px), &g) in cand.iter_mut().zip(&p).zip(&grad) {
                *c = px + step * g;
            }
            project_simplex(&mut cand);
            let cv = obj.log_likelihood(&cand);
            let lin: f64 = cand
                .iter()
                .zip(&p)
                .zip(&grad)
                .map(|((c, px), g)| g * (c - px))
                .sum();
            if cv.is_finite() && cv >= value + ARMIJO * lin {
                accepted = Some(cv);
                break;
            }
            step *= 0.5;
        }
        let Some(cv) = accepted else { break };
        std::mem::swap(&mut p, &mut cand);
        let next = obj.value_and_gradient(&p, &mut grad);
        let gain = cv - value;
        value = next.max(value);
        step *= 2.0;
        if gain < CONVERGENCE_TOL {
            break;
        }
    }
    (value, p)
}

fn dirichlet_point(support: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..support)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut rng);
            e.max(f64::MIN_POSITIVE)
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Start `index` for a support size: uniform, then the empirical
/// distribution padded with zeros, then Dirichlet(1) draws.
fn start_point(profile: &Profile, support: usize, index: usize, seed: u64) -> Vec<f64> {
    match index {
        0 => vec![1.0 / support as f64; support],
        1 => {
            let n = profile.n() as f64;
            let mut p = vec![0.0; support];
            for (slot, &mu) in p.iter_mut().zip(profile.multiplicities().iter().rev()) {
                *slot = mu as f64 / n;
            }
            p
        }
        _ => dirichlet_point(support, derive_seed(seed, &[support as u64, index as u64])),
    }
}

struct Candidate {
    support: usize,
    value: f64,
    point: Vec<f64>,
}

fn tie_slack(best: f64) -> f64 {
    TIE_TOLERANCE * best.abs().max(1.0)
}

/// Best over candidates: the largest likelihood, with candidates within the
/// tie tolerance resolved toward the smaller support, then the earlier start.
fn select(candidates: Vec<Candidate>) -> Option<(f64, Candidate)> {
    let best = candidates
        .iter()
        .map(|c| c.value)
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    let slack = tie_slack(best);
    let mut chosen: Option<Candidate> = None;
    for c in candidates {
        if c.value < best - slack {
            continue;
        }
        chosen = match chosen {
            Some(cur) if cur.support < c.support => Some(cur),
            Some(cur) if cur.support == c.support && cur.value >= c.value => Some(cur),
            _ => Some(c),
        };
    }
    chosen.map(|c| (best, c))
}

fn finalize(
    profile: &Profile,
    best: f64,
    point: &[f64],
    searched: (usize, usize),
) -> Result<PmlResult> {
    let mut probs: Vec<f64> = point.iter().copied().filter(|&x| x > 0.0).collect();
    probs.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= total);
    let dist = DiscreteDistribution::new(probs)?;
    let log_likelihood = profile_log_probability(&dist, profile);
    // the chosen point is the incumbent up to the tie tolerance
    let beta_empirical = if log_likelihood >= best - tie_slack(best) {
        1.0
    } else {
        (log_likelihood - best).exp()
    };
    Ok(PmlResult {
        dist,
        log_likelihood,
        beta_empirical,
        support_size_searched: searched,
    })
}

fn run_starts(
    profile: &Profile,
    obj: &Objective,
    supports: &[usize],
    restarts: usize,
    seed: u64,
) -> Vec<Candidate> {
    let units: Vec<(usize, usize)> = supports
        .iter()
        .flat_map(|&s| (0..restarts + 2).map(move |i| (s, i)))
        .collect();
    units
        .into_par_iter()
        .map(|(support, index)| {
            let (value, point) = ascend(obj, start_point(profile, support, index, seed));
            Candidate {
                support,
                value,
                point,
            }
        })
        .collect()
}

/// Approximate PML over the given support sizes.
///
/// Every support size in range gets a uniform start, an empirical start and
/// `restarts` Dirichlet(1) starts, each seeded from `(seed, support, index)`.
/// Support sizes below the number of distinct symbols of the profile are
/// skipped. The result is deterministic given `seed`.
pub fn pml_optimize(
    profile: &Profile,
    support_range: RangeInclusive<usize>,
    restarts: usize,
    seed: u64,
) -> Result<PmlResult> {
    if profile.n() > MAX_PML_N {
        return Err(Error::OutOfGuard {
            what: "profile sample size",
            value: profile.n(),
            range: format!("1..={MAX_PML_N}"),
        });
    }
    if support_range.is_empty() {
        return invalid(format!("empty support range {support_range:?}"));
    }
    if *support_range.start() == 0 {
        return invalid("support sizes must be positive");
    }
    let supports: Vec<usize> = support_range
        .clone()
        .filter(|&s| s >= profile.parts())
        .collect();
    if supports.is_empty() {
        return invalid(format!(
            "support range {support_range:?} lies below the {} distinct symbols of the profile",
            profile.parts()
        ));
    }
    let obj = Objective::new(profile);
    let candidates = run_starts(profile, &obj, &supports, restarts, seed);
    let searched = (*support_range.start(), *support_range.end());
    let (best, chosen) = select(candidates)
        .ok_or_else(|| Error::InvalidArgument("no start reached a positive likelihood".into()))?;
    finalize(profile, best, &chosen.point, searched)
}

/// Log-likelihood of the best point of the `1/64` grid with at most
/// `max_support` positive entries, along with that point.
fn grid_sweep(obj: &Objective, max_support: usize, min_parts: usize) -> Option<(f64, Vec<f64>)> {
    fn walk(
        obj: &Objective,
        remaining: u32,
        cap: u32,
        slots: usize,
        min_parts: usize,
        current: &mut Vec<u32>,
        best: &mut Option<(f64, Vec<f64>)>,
    ) {
        if remaining == 0 {
            if current.len() >= min_parts {
                let p: Vec<f64> = current
                    .iter()
                    .map(|&c| c as f64 / GRID_RESOLUTION as f64)
                    .collect();
                let v = obj.log_likelihood(&p);
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    *best = Some((v, p));
                }
            }
            return;
        }
        if slots == 0 {
            return;
        }
        let lo = remaining.div_ceil(slots as u32);
        for c in (lo..=cap.min(remaining)).rev() {
            current.push(c);
            walk(obj, remaining - c, c, slots - 1, min_parts, current, best);
            current.pop();
        }
    }

    let total = GRID_RESOLUTION;
    let lo = total.div_ceil(max_support as u32);
    let per_first: Vec<Option<(f64, Vec<f64>)>> = (lo..=total)
        .into_par_iter()
        .map(|first| {
            let mut best = None;
            let mut current = vec![first];
            walk(
                obj,
                total - first,
                first,
                max_support - 1,
                min_parts,
                &mut current,
                &mut best,
            );
            best
        })
        .collect();
    per_first
        .into_iter()
        .flatten()
        .filter(|(v, _)| v.is_finite())
        .fold(None, |acc: Option<(f64, Vec<f64>)>, (v, p)| match acc {
            Some((b, _)) if b >= v => acc,
            _ => Some((v, p)),
        })
}

/// PML over supports of size at most `max_support`, for tiny profiles.
///
/// Runs [`pml_optimize`]-style multistart ascent on every support size up to
/// `max_support`, then evaluates every point of the `1/64` simplex grid. If a
/// grid point beats the ascent it is used as a further start, so the returned
/// likelihood is at least every grid value.
pub fn pml_exact_tiny(profile: &Profile, max_support: usize) -> Result<PmlResult> {
    if profile.n() > MAX_TINY_N {
        return Err(Error::OutOfGuard {
            what: "profile sample size",
            value: profile.n(),
            range: format!("1..={MAX_TINY_N}"),
        });
    }
    if max_support == 0 || max_support > MAX_TINY_SUPPORT {
        return Err(Error::OutOfGuard {
            what: "max support",
            value: max_support,
            range: format!("1..={MAX_TINY_SUPPORT}"),
        });
    }
    if profile.parts() > max_support {
        return invalid(format!(
            "profile has {} distinct symbols, more than the support bound {max_support}",
            profile.parts()
        ));
    }
    let obj = Objective::new(profile);
    let supports: Vec<usize> = (profile.parts()..=max_support).collect();
    let mut candidates = run_starts(profile, &obj, &supports, DEFAULT_RESTARTS, 0);
    let ascent_best = candidates
        .iter()
        .map(|c| c.value)
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some((gv, gp)) = grid_sweep(&obj, max_support, profile.parts()) {
        if gv > ascent_best {
            let support = gp.len();
            let (value, point) = ascend(&obj, gp);
            candidates.push(Candidate {
                support,
                value,
                point,
            });
        }
    }
    let (best, chosen) = select(candidates)
        .ok_or_else(|| Error::InvalidArgument("no start reached a positive likelihood".into()))?;
    finalize(profile, best, &chosen.point, (1, max_support))
}

/// `exp(candidate log-likelihood - reference log-likelihood)`; zero when the
/// profile is impossible under the candidate. Values above one mean the
/// reference was not optimal.
pub fn beta_certificate(
    candidate: &DiscreteDistribution,
    profile: &Profile,
    reference: &PmlResult,
) -> f64 {
    let ll = profile_log_probability(candidate, profile);
    if ll == f64::NEG_INFINITY {
        return 0.0;
    }
    (ll - reference.log_likelihood).exp()
}

/// Property of the PML distribution of the sample's profile. Support size is
/// reported raw (number of symbols with positive PML probability). For
/// distance to uniformity the search is capped at the declared alphabet.
pub fn pml_plugin<T: Eq + Hash>(
    samples: &[T],
    kind: PropertyKind,
    settings: &PmlSettings,
) -> Result<f64> {
    let profile = extract_profile(samples)?;
    let mut range = match settings.support {
        Some((lo, hi)) => lo..=hi,
        None => default_support_range(&profile),
    };
    if let PropertyKind::DistanceToUniform { k } = kind {
        range = *range.start()..=(*range.end()).min(k);
    }
    let result = pml_optimize(&profile, range, settings.restarts, settings.seed)?;
    result.dist.true_property(kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_uniform;

    fn prof(v: &[u32]) -> Profile {
        Profile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn projection() {
        let mut v = vec![0.5, 0.5, 0.5];
        project_simplex(&mut v);
        for x in &v {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let mut w = vec![2.0, 0.0, -1.0];
        project_simplex(&mut w);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn objective_matches_log_probability() {
        let profile = prof(&[1, 1, 2, 3]);
        let obj = Objective::new(&profile);
        let p = vec![0.1, 0.2, 0.3, 0.15, 0.25];
        let d = DiscreteDistribution::new(p.clone()).unwrap();
        let expected = profile_log_probability(&d, &profile);
        assert!((obj.log_likelihood(&p) - expected).abs() < 1e-12);
        let mut g = vec![0.0; 5];
        assert!((obj.value_and_gradient(&p, &mut g) - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let profile = prof(&[1, 2, 2, 4]);
        let obj = Objective::new(&profile);
        let p = vec![0.12, 0.3, 0.08, 0.22, 0.28];
        let mut g = vec![0.0; 5];
        obj.value_and_gradient(&p, &mut g);
        // the objective is homogeneous only on the simplex, so perturb a single
        // coordinate off the simplex and compare with the raw partial derivative
        let h = 1e-6;
        for x in 0..5 {
            let mut up = p.clone();
            let mut dn = p.clone();
            up[x] += h;
            dn[x] -= h;
            let fd = (obj.log_likelihood(&up) - obj.log_likelihood(&dn)) / (2.0 * h);
            // log_likelihood rescales by the support size, which is unchanged
            assert!(
                (fd - g[x]).abs() < 1e-5 * g[x].abs().max(1.0),
                "{x}: {fd} vs {}",
                g[x]
            );
        }
    }

    #[test]
    fn two_symbol_profile() {
        let r = pml_optimize(&prof(&[1, 2]), 1..=6, 10, 1).unwrap();
        assert!((r.likelihood() - 0.75).abs() < 1e-6);
        assert_eq!(r.support(), 2);
        assert_eq!(r.beta_empirical, 1.0);
    }

    #[test]
    fn point_mass_profile() {
        let r = pml_optimize(&prof(&[5]), 1..=4, 5, 0).unwrap();
        assert!(r.log_likelihood.abs() < 1e-12);
        assert_eq!(r.support(), 1);
    }

    #[test]
    #[allow(clippy::reversed_empty_ranges)]
    fn guards() {
        assert!(pml_optimize(&prof(&[1, 2]), 3..=2, 5, 0).is_err());
        assert!(pml_optimize(&prof(&[1, 1, 2]), 1..=2, 5, 0).is_err());
        assert!(pml_optimize(&prof(&[41]), 1..=2, 5, 0).is_err());
        assert!(pml_exact_tiny(&prof(&[11]), 3).is_err());
        assert!(pml_exact_tiny(&prof(&[1, 2]), 13).is_err());
        assert!(pml_exact_tiny(&prof(&[1, 1, 1]), 2).is_err());
    }

    #[test]
    fn beta_values() {
        let profile = prof(&[1, 2]);
        let r = pml_optimize(&profile, 1..=4, 5, 0).unwrap();
        assert!((beta_certificate(&r.dist, &profile, &r) - 1.0).abs() < 1e-12);
        let u3 = make_uniform(3).unwrap();
        assert!((beta_certificate(&u3, &profile, &r) - 8.0 / 9.0).abs() < 1e-6);
        let u1 = make_uniform(1).unwrap();
        assert_eq!(beta_certificate(&u1, &profile, &r), 0.0);
    }
}
