use std::collections::HashMap;

use proptest::prelude::*;
use symprop::distributions::DiscreteDistribution;
use symprop::poly_approx::{
    best_poly_approx, best_poly_approx_anchored, falling_factorial_estimate, Interval, Target,
};
use symprop::profiles::{
    count_profiles, enumerate_profiles, extract_profile, profile_log_probability,
    profile_probability, Profile,
};

/// Partition numbers by the textbook "largest part at most j" recurrence.
fn partitions_by_largest_part(max: usize) -> Vec<u128> {
    // table[n][j]: partitions of n into parts <= j
    let mut table = vec![vec![0u128; max + 1]; max + 1];
    for j in 0..=max {
        table[0][j] = 1;
    }
    for n in 1..=max {
        for j in 1..=max {
            table[n][j] = table[n][j - 1] + if j <= n { table[n - j][j] } else { 0 };
        }
    }
    (0..=max).map(|n| table[n][max]).collect()
}

#[test]
fn profile_counts_match_partition_recurrence() {
    let p = partitions_by_largest_part(40);
    for n in 1..=40 {
        assert_eq!(count_profiles(n), p[n], "n = {n}");
    }
    for n in 1..=20 {
        assert_eq!(enumerate_profiles(n).unwrap().len() as u128, p[n]);
    }
    assert_eq!(p[40], 37_338);
}

#[test]
fn enumerated_profiles_are_distinct_partitions() {
    for n in 1..=12 {
        let all = enumerate_profiles(n).unwrap();
        let mut seen = std::collections::HashSet::new();
        for phi in &all {
            assert_eq!(phi.n(), n);
            assert!(phi.multiplicities().iter().all(|&m| m >= 1));
            assert!(seen.insert(phi.clone()));
        }
    }
}

/// Sums sequence probabilities by profile over all `k^n` sequences.
fn brute_force_profiles(probs: &[f64], n: usize) -> HashMap<Profile, f64> {
    let k = probs.len();
    let mut out: HashMap<Profile, f64> = HashMap::new();
    let mut seq = vec![0u32; n];
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        let mut pr = 1.0;
        for slot in seq.iter_mut() {
            *slot = (c % k) as u32;
            pr *= probs[c % k];
            c /= k;
        }
        *out.entry(extract_profile(&seq).unwrap()).or_default() += pr;
    }
    out
}

#[test]
fn brute_force_equivalence_up_to_four_symbols() {
    let dists = [
        vec![0.25, 0.25, 0.25, 0.25],
        vec![0.4, 0.3, 0.2, 0.1],
        vec![0.7, 0.1, 0.1, 0.1],
        vec![0.5, 0.5, 0.0, 0.0],
        vec![0.9, 0.05, 0.05],
        vec![1.0],
    ];
    for probs in dists {
        let d = DiscreteDistribution::new(probs.clone()).unwrap();
        for n in 1..=7 {
            let oracle = brute_force_profiles(&probs, n);
            let mut total = 0.0;
            for phi in enumerate_profiles(n).unwrap() {
                let got = profile_probability(&d, &phi);
                let want = oracle.get(&phi).copied().unwrap_or(0.0);
                assert!(
                    (got - want).abs() <= 1e-12 * want.max(1e-300) + 1e-15,
                    "{probs:?} {phi}: {got} vs {want}"
                );
                let ln = profile_log_probability(&d, &phi);
                if want > 0.0 {
                    assert!(
                        (ln - want.ln()).abs() <= 1e-10,
                        "{phi}: ln {ln} vs {}",
                        want.ln()
                    );
                } else {
                    assert_eq!(ln, f64::NEG_INFINITY);
                }
                total += got;
            }
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn worked_profile_probabilities() {
    let u2 = DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
    // xyx: one symbol twice, another once
    let phi = Profile::new(vec![1, 2]).unwrap();
    assert!((profile_probability(&u2, &phi) - 0.75).abs() < 1e-15);
    // pair symbol, unordered singleton pair, then 4!/2! arrangements
    let u5 = DiscreteDistribution::new(vec![0.2; 5]).unwrap();
    let phi = Profile::new(vec![1, 1, 2]).unwrap();
    let want = 5.0 * 6.0 * 12.0 / 5f64.powi(4);
    assert!((profile_probability(&u5, &phi) - want).abs() < 1e-14);
    assert!((want - 0.576).abs() < 1e-12);
}

#[test]
fn entropy_approx_error_shrinks_like_inverse_square() {
    let unit = Interval::new(0.0, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    for degree in [2, 4, 8, 16] {
        let a = best_poly_approx(Target::NegYLogY, unit, degree).unwrap();
        let scaled = a.sup_error * (degree * degree) as f64;
        assert!(scaled <= 1.0, "L = {degree}: sup_error * L^2 = {scaled}");
        assert!(a.sup_error < prev);
        prev = a.sup_error;
        let anchored = best_poly_approx_anchored(Target::NegYLogY, unit, degree).unwrap();
        assert_eq!(anchored.coeffs[0], 0.0);
        assert!(anchored.sup_error * ((degree * degree) as f64) <= 2.0);
    }
}

#[test]
fn measured_sup_error_matches_dense_scan() {
    let iv = Interval::new(0.0, 0.3).unwrap();
    for degree in 1..=8 {
        let a = best_poly_approx(Target::NegYLogY, iv, degree).unwrap();
        let mut scan = 0.0f64;
        for i in 0..=100_000 {
            let y = 0.3 * i as f64 / 100_000.0;
            scan = scan.max((Target::NegYLogY.eval(y) - a.eval(y)).abs());
        }
        assert!(
            scan <= a.sup_error * (1.0 + 1e-6) + 1e-15,
            "L={degree}: {scan} > {}",
            a.sup_error
        );
        assert!(scan >= a.sup_error * 0.999);
    }
}

#[test]
fn abs_approx_equioscillates() {
    let iv = Interval::new(-1.0, 1.0).unwrap();
    for degree in 1..=5 {
        let a = best_poly_approx(Target::AbsShift { c: 0.0 }, iv, degree).unwrap();
        let ext = a.error_extrema();
        assert!(
            ext.len() >= degree + 2,
            "L={degree}: only {} extrema",
            ext.len()
        );
        for w in ext.windows(2) {
            assert!(w[0].1.signum() != w[1].1.signum());
        }
        let big: Vec<_> = ext
            .iter()
            .filter(|e| e.1.abs() >= 0.99 * a.sup_error)
            .collect();
        assert!(
            big.len() >= degree + 2,
            "L={degree}: {} extrema within 1%",
            big.len()
        );
    }
}

#[test]
fn sup_error_never_grows_with_degree() {
    let cases = [
        (Target::NegYLogY, Interval::new(0.0, 1.0).unwrap()),
        (Target::NegYLogY, Interval::new(0.0, 0.02).unwrap()),
        (
            Target::AbsShift { c: 0.0 },
            Interval::new(-1.0, 1.0).unwrap(),
        ),
        (
            Target::AbsShift { c: 0.3 },
            Interval::new(-1.0, 1.0).unwrap(),
        ),
        (
            Target::AbsShift { c: 0.001 },
            Interval::new(0.0, 0.01).unwrap(),
        ),
    ];
    for (target, iv) in cases {
        let mut prev = f64::INFINITY;
        for degree in 1..=14 {
            let a = best_poly_approx(target, iv, degree).unwrap();
            assert!(
                a.sup_error <= prev * (1.0 + 1e-5),
                "{target:?} on {iv:?}, L={degree}: {} > {prev}",
                a.sup_error
            );
            prev = a.sup_error;
        }
    }
}

#[test]
fn abs_coefficients_respect_growth_bound() {
    let iv = Interval::new(-1.0, 1.0).unwrap();
    for degree in 1..=12 {
        for c in [0.0, 0.3, -0.6] {
            let a = best_poly_approx(Target::AbsShift { c }, iv, degree).unwrap();
            assert!(
                a.max_abs_coeff() <= 8f64.powi(degree as i32),
                "L={degree} c={c}"
            );
        }
    }
}

#[test]
fn linear_abs_matches_grid_search() {
    // brute-force minimax line for |x| on [-1, 1]
    let xs: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for ia in 0..=200 {
        let a0 = ia as f64 / 200.0;
        for ib in -50..=50 {
            let a1 = ib as f64 / 100.0;
            let err = xs
                .iter()
                .map(|&x| (x.abs() - a0 - a1 * x).abs())
                .fold(0.0, f64::max);
            if err < best.0 {
                best = (err, a0, a1);
            }
        }
    }
    let a = best_poly_approx(
        Target::AbsShift { c: 0.0 },
        Interval::new(-1.0, 1.0).unwrap(),
        1,
    )
    .unwrap();
    assert!((a.sup_error - best.0).abs() < 1e-6);
    assert!((a.coeffs[0] - best.1).abs() < 1e-6);
    assert!((a.coeffs[1] - best.2).abs() < 1e-6);
}

fn exact_binomial_expectation(coeffs: &[f64], n: u64, p: f64) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for c in 0..=n {
        if c > 0 {
            binom = binom * (n - c + 1) as f64 / c as f64;
        }
        let w = binom * p.powi(c as i32) * (1.0 - p).powi((n - c) as i32);
        total += w * falling_factorial_estimate(coeffs, c, n);
    }
    total
}

proptest! {
    #[test]
    fn falling_factorial_is_unbiased(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..7),
        extra in 0u64..10,
        p in 0.0f64..=1.0,
    ) {
        let n = coeffs.len() as u64 - 1 + extra;
        prop_assume!(n >= 1);
        let want: f64 = coeffs.iter().enumerate().map(|(i, b)| b * p.powi(i as i32)).sum();
        let got = exact_binomial_expectation(&coeffs, n, p);
        prop_assert!((got - want).abs() <= 1e-10, "{} vs {}", got, want);
    }

    #[test]
    fn profile_probability_ignores_labels(
        weights in prop::collection::vec(0.0f64..1.0, 1..5),
        rotate in 0usize..5,
        n in 1usize..7,
    ) {
        prop_assume!(weights.iter().sum::<f64>() > 1e-3);
        let d = DiscreteDistribution::from_weights(&weights).unwrap();
        let mut w2 = weights.clone();
        let len = w2.len();
        w2.rotate_left(rotate % len);
        w2.push(0.0);
        let d2 = DiscreteDistribution::from_weights(&w2).unwrap();
        let mut total = 0.0;
        for phi in enumerate_profiles(n).unwrap() {
            let a = profile_probability(&d, &phi);
            let b = profile_probability(&d2, &phi);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(b) + 1e-15);
            total += a;
        }
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }
}
