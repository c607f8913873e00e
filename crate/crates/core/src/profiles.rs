//! Profiles (multisets of symbol multiplicities), their enumeration as integer
//! partitions, and exact profile probabilities under i.i.d. sampling.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteDistribution;
use crate::error::{invalid, Error, Result};

/// Largest `n` accepted by [`enumerate_profiles`].
pub const MAX_ENUMERATION_N: usize = 60;

/// Sorted (ascending) multiplicities of the symbols that appear in a sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Profile {
    multiplicities: Vec<u32>,
}

/// `mu -> phi_mu`, the number of symbols appearing exactly `mu` times.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Prevalence {
    pub counts: BTreeMap<u32, u32>,
}

impl Profile {
    pub fn new(mut multiplicities: Vec<u32>) -> Result<Self> {
        if multiplicities.is_empty() {
            return invalid("a profile needs at least one multiplicity");
        }
        if multiplicities.contains(&0) {
            return invalid("profile multiplicities must be positive");
        }
        multiplicities.sort_unstable();
        Ok(Self { multiplicities })
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// Sample length, the sum of the multiplicities.
    pub fn n(&self) -> usize {
        self.multiplicities.iter().map(|&m| m as usize).sum()
    }

    /// Number of distinct symbols observed.
    pub fn parts(&self) -> usize {
        self.multiplicities.len()
    }

    /// Number of symbols appearing exactly `mu` times.
    pub fn phi(&self, mu: u32) -> usize {
        self.multiplicities.iter().filter(|&&m| m == mu).count()
    }

    pub fn prevalence(&self) -> Prevalence {
        let mut counts = BTreeMap::new();
        for &m in &self.multiplicities {
            *counts.entry(m).or_insert(0) += 1;
        }
        Prevalence { counts }
    }

    pub fn from_prevalence(prevalence: &Prevalence) -> Result<Self> {
        let mut mults = Vec::new();
        for (&mu, &phi) in &prevalence.counts {
            mults.extend(std::iter::repeat_n(mu, phi as usize));
        }
        Self::new(mults)
    }
}

impl TryFrom<Vec<u32>> for Profile {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        Profile::new(v)
    }
}

impl From<Profile> for Vec<u32> {
    fn from(p: Profile) -> Self {
        p.multiplicities
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for m in &self.multiplicities {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mults = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidArgument(format!("bad multiplicity `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Profile::new(mults)
    }
}

impl Prevalence {
    /// `sum_mu mu * phi_mu`.
    pub fn n(&self) -> usize {
        self.counts
            .iter()
            .map(|(&mu, &phi)| mu as usize * phi as usize)
            .sum()
    }
}

/// Profile of a nonempty sample over any hashable alphabet.
pub fn extract_profile<T: Eq + Hash>(samples: &[T]) -> Result<Profile> {
    if samples.is_empty() {
        return invalid("cannot take the profile of an empty sample");
    }
    let mut counts: HashMap<&T, u32> = HashMap::new();
    for s in samples {
        *counts.entry(s).or_insert(0) += 1;
    }
    Profile::new(counts.into_values().collect())
}

/// All profiles of length-`n` sequences, i.e. the integer partitions of `n`,
/// in lexicographic order of their ascending multiplicity lists.
pub fn enumerate_profiles(n: usize) -> Result<Vec<Profile>> {
    if n == 0 || n > MAX_ENUMERATION_N {
        return Err(Error::OutOfGuard {
            what: "profile length n",
            value: n,
            range: format!("1..={MAX_ENUMERATION_N}"),
        });
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    partitions_from(n as u32, 1, &mut prefix, &mut out);
    Ok(out)
}

fn partitions_from(remaining: u32, min_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Profile>) {
    for first in min_part..=remaining {
        let rest = remaining - first;
        if rest != 0 && rest < first {
            continue;
        }
        prefix.push(first);
        if rest == 0 {
            out.push(Profile {
                multiplicities: prefix.clone(),
            });
        } else {
            partitions_from(rest, first, prefix, out);
        }
        prefix.pop();
    }
}

/// Partition number `p(n)` by the coin-change recurrence.
pub fn count_profiles(n: usize) -> u128 {
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for part in 1..=n {
        for total in part..=n {
            ways[total] += ways[total - part];
        }
    }
    ways[n]
}

pub(crate) fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `ln( n! / prod_j mu_j! )`, the number of orderings of one labelled assignment.
fn ln_sequence_multiplicity(profile: &Profile) -> f64 {
    ln_factorial(profile.n() as u32)
        - profile
            .multiplicities
            .iter()
            .map(|&m| ln_factorial(m))
            .sum::<f64>()
}

/// Probability that `n` i.i.d. draws from `dist` have the given profile.
///
/// Evaluated through the closed form
/// `n!/prod mu_j! * 1/prod phi_mu! * sum over ordered tuples of distinct
/// symbols x_1..x_P of prod p(x_j)^{mu_j}`, enumerating the tuples directly.
/// Cost grows like `S(p)^P`; use [`profile_log_probability`] beyond tiny sizes.
pub fn profile_probability(dist: &DiscreteDistribution, profile: &Profile) -> f64 {
    let probs = dist.positive_probs();
    let parts = profile.multiplicities();
    if parts.len() > probs.len() {
        return 0.0;
    }
    let mut used = vec![false; probs.len()];
    let tuple_sum = sum_over_injections(&probs, parts, &mut used, 1.0);

    let interchangeable: f64 = profile
        .prevalence()
        .counts
        .values()
        .map(|&phi| ln_factorial(phi))
        .sum();
    let coeff = (ln_sequence_multiplicity(profile) - interchangeable).exp();
    (coeff * tuple_sum).min(1.0)
}

fn sum_over_injections(probs: &[f64], parts: &[u32], used: &mut [bool], acc: f64) -> f64 {
    let Some((&mu, rest)) = parts.split_first() else {
        return acc;
    };
    let mut total = 0.0;
    for x in 0..probs.len() {
        if used[x] {
            continue;
        }
        used[x] = true;
        total += sum_over_injections(probs, rest, used, acc * probs[x].powi(mu as i32));
        used[x] = false;
    }
    total
}

/// Natural log of [`profile_probability`], computed in log space; `-inf` when
/// the profile is impossible under `dist`.
///
/// Runs a dynamic program over symbols whose state records how many symbols
/// have been assigned each distinct multiplicity, so the cost is
/// `S(p) * prod_mu (phi_mu + 1) * #distinct` rather than exponential in the
/// number of parts.
pub fn profile_log_probability(dist: &DiscreteDistribution, profile: &Profile) -> f64 {
    let lattice = Lattice::new(profile);
    let log_probs: Vec<f64> = dist.positive_probs().iter().map(|p| p.ln()).collect();
    if profile.parts() > log_probs.len() {
        return f64::NEG_INFINITY;
    }
    let log_sum = lattice.log_monomial_sum(&log_probs);
    if log_sum == f64::NEG_INFINITY {
        return log_sum;
    }
    lattice.ln_coefficient + log_sum
}

#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Mixed-radix state space for assigning distinct multiplicities to symbols.
///
/// A state holds, for each distinct multiplicity `mu`, how many symbols have
/// been given that multiplicity so far (between `0` and `phi_mu`). The
/// monomial symmetric polynomial of the profile is the full state's value after
/// folding in every symbol.
#[derive(Debug, Clone)]
pub(crate) struct Lattice {
    /// Distinct multiplicities, ascending.
    pub values: Vec<u32>,
    /// `phi_mu` for each entry of `values`.
    pub counts: Vec<u32>,
    pub strides: Vec<usize>,
    pub size: usize,
    /// `ln(n!/prod mu_j!)`: profile probability is this times the monomial
    /// symmetric polynomial (each distinct monomial counted once).
    pub ln_coefficient: f64,
}

impl Lattice {
    pub fn new(profile: &Profile) -> Self {
        let prevalence = profile.prevalence();
        let values: Vec<u32> = prevalence.counts.keys().copied().collect();
        let counts: Vec<u32> = prevalence.counts.values().copied().collect();
        let mut strides = Vec::with_capacity(values.len());
        let mut size = 1usize;
        for &c in &counts {
            strides.push(size);
            size *= c as usize + 1;
        }
        let ln_coefficient = ln_sequence_multiplicity(profile);
        Self {
            values,
            counts,
            strides,
            size,
            ln_coefficient,
        }
    }

    #[inline]
    pub fn digit(&self, state: usize, v: usize) -> u32 {
        ((state / self.strides[v]) % (self.counts[v] as usize + 1)) as u32
    }

    pub fn full(&self) -> usize {
        self.size - 1
    }

    /// `ln m_lambda(p)` from log-probabilities.
    pub fn log_monomial_sum(&self, log_probs: &[f64]) -> f64 {
        let mut dp = vec![f64::NEG_INFINITY; self.size];
        dp[0] = 0.0;
        for &lp in log_probs {
            self.fold_symbol_log(&mut dp, lp);
        }
        dp[self.full()]
    }

    fn fold_symbol_log(&self, dp: &mut [f64], lp: f64) {
        for s in (1..self.size).rev() {
            let mut acc = dp[s];
            for v in 0..self.values.len() {
                if self.digit(s, v) > 0 {
                    let prev = dp[s - self.strides[v]];
                    if prev > f64::NEG_INFINITY {
                        acc = log_add_exp(acc, prev + self.values[v] as f64 * lp);
                    }
                }
            }
            dp[s] = acc;
        }
    }

    /// Folds one symbol with (scaled) probability `q` into a linear-domain table.
    pub fn fold_symbol(&self, src: &[f64], dst: &mut [f64], powers: &[f64]) {
        dst.copy_from_slice(src);
        for s in 1..self.size {
            let mut acc = dst[s];
            for v in 0..self.values.len() {
                if self.digit(s, v) > 0 {
                    acc += src[s - self.strides[v]] * powers[v];
                }
            }
            dst[s] = acc;
        }
    }

    /// Calls `f(a, c - a)` for every state `a` dominated componentwise by `c`.
    pub fn for_each_split(&self, c: usize, mut f: impl FnMut(usize, usize)) {
        let dims = self.values.len();
        let limits: Vec<u32> = (0..dims).map(|v| self.digit(c, v)).collect();
        let mut digits = vec![0u32; dims];
        let mut a = 0usize;
        loop {
            f(a, c - a);
            let mut v = 0;
            loop {
                if v == dims {
                    return;
                }
                if digits[v] < limits[v] {
                    digits[v] += 1;
                    a += self.strides[v];
                    break;
                }
                a -= digits[v] as usize * self.strides[v];
                digits[v] = 0;
                v += 1;
            }
        }
    }
}
