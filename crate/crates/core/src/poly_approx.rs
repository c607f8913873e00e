//! Near-minimax polynomial approximation on an interval and unbiased
//! estimation of polynomials in an unknown probability from binomial counts.
//!
//! Approximations start from a Chebyshev interpolant and are refined with
//! Remez exchange iterations until the error heights on the reference set
//! agree within [`EXCHANGE_TOL`]. Computation happens in the Chebyshev basis
//! of the rescaled variable; the result is stored as monomial coefficients in
//! the original variable because the falling-factorial estimator consumes
//! powers of `p` directly. Expect conditioning loss in the monomial form
//! beyond degree ~25 and on very short intervals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest supported degree.
pub const MAX_DEGREE: usize = 40;

/// Relative agreement of reference error heights that ends the exchange.
pub const EXCHANGE_TOL: f64 = 1e-6;

const MAX_EXCHANGES: usize = 80;

/// Function being approximated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// `-y ln y`, continuous at 0.
    NegYLogY,
    /// `|y - c|`.
    AbsShift { c: f64 },
}

impl Target {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            Target::NegYLogY => {
                if y <= 0.0 {
                    0.0
                } else {
                    -y * y.ln()
                }
            }
            Target::AbsShift { c } => (y - c).abs(),
        }
    }

    fn kink(&self) -> Option<f64> {
        match *self {
            Target::NegYLogY => None,
            Target::AbsShift { c } => Some(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || !(lo < hi) {
            return invalid(format!("degenerate interval [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi })
    }

    fn to_unit(self, y: f64) -> f64 {
        (2.0 * y - (self.lo + self.hi)) / (self.hi - self.lo)
    }

    fn from_unit(self, u: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * u
    }
}

/// A polynomial `sum_i b_i y^i` together with the interval it was fitted on
/// and its measured worst-case deviation from the target there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialApprox {
    pub degree: usize,
    /// Monomial coefficients `b_0..b_L` in the original variable.
    pub coeffs: Vec<f64>,
    pub interval: Interval,
    pub sup_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
}

impl PolynomialApprox {
    /// Wraps explicit coefficients; `sup_error` is zero and no target is recorded.
    pub fn from_coeffs(coeffs: Vec<f64>, interval: Interval) -> Self {
        Self {
            degree: coeffs.len().saturating_sub(1),
            coeffs,
            interval,
            sup_error: 0.0,
            target: None,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        horner(&self.coeffs, y)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, b| m.max(b.abs()))
    }

    /// Alternating local extrema `(y, target(y) - P(y))` of the error curve on
    /// the dense evaluation grid, one per sign run.
    pub fn error_extrema(&self) -> Vec<(f64, f64)> {
        let Some(target) = self.target else {
            return Vec::new();
        };
        let grid = dense_grid(self.interval, self.degree, target.kink());
        let err = |y: f64| target.eval(y) - self.eval(y);
        alternating_extrema(&grid, &err)
    }

    /// Unbiased estimate of `sum_i b_i p^i` from `count ~ Binomial(n, p)`.
    pub fn falling_factorial_estimate(&self, count: u64, n: u64) -> f64 {
        falling_factorial_estimate(&self.coeffs, count, n)
    }
}

/// `sum_i b_i (count)_i / (n)_i`, with `(a)_i` the falling factorial.
///
/// Terms with `i > n` vanish. Panics if `count > n` or `n == 0`.
pub fn falling_factorial_estimate(coeffs: &[f64], count: u64, n: u64) -> f64 {
    assert!(n > 0 && count <= n, "need 0 <= count <= n, got {count}/{n}");
    let mut ratio = 1.0;
    let mut total = 0.0;
    for (i, &b) in coeffs.iter().enumerate() {
        if i > 0 {
            let j = (i - 1) as u64;
            if j >= count {
                break;
            }
            ratio *= (count - j) as f64 / (n - j) as f64;
        }
        total += b * ratio;
    }
    total
}

/// Best (near-minimax) degree-`degree` polynomial approximation of `target`
/// on `interval`.
pub fn best_poly_approx(
    target: Target,
    interval: Interval,
    degree: usize,
) -> Result<PolynomialApprox> {
    check_degree(degree)?;
    let interval = Interval::new(interval.lo, interval.hi)?;
    let basis = Basis {
        interval,
        anchored: false,
        len: degree + 1,
    };
    fit(target, basis, degree)
}

/// Like [`best_poly_approx`] but constrained to agree with `target` at the
/// left endpoint, i.e. `P(y) = target(lo) + (y - lo) q(y)`.
///
/// For `NegYLogY` on `[0, h]` this yields `b_0 = 0`, so the polynomial
/// estimate of an unseen symbol is exactly zero.
pub fn best_poly_approx_anchored(
    target: Target,
    interval: Interval,
    degree: usize,
) -> Result<PolynomialApprox> {
    check_degree(degree)?;
    if degree == 0 {
        return invalid("an anchored approximation needs degree >= 1");
    }
    let interval = Interval::new(interval.lo, interval.hi)?;
    let basis = Basis {
        interval,
        anchored: true,
        len: degree,
    };
    fit(target, basis, degree)
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::OutOfGuard {
            what: "polynomial degree",
            value: degree,
            range: format!("0..={MAX_DEGREE}"),
        });
    }
    Ok(())
}

/// Chebyshev basis on the rescaled variable, optionally multiplied by `(y - lo)`.
#[derive(Debug, Clone, Copy)]
struct Basis {
    interval: Interval,
    anchored: bool,
    len: usize,
}

impl Basis {
    fn row(&self, y: f64, out: &mut [f64]) {
        let u = self.interval.to_unit(y);
        let factor = if self.anchored {
            y - self.interval.lo
        } else {
            1.0
        };
        let (mut t_prev, mut t) = (1.0, u);
        for (j, slot) in out.iter_mut().enumerate() {
            let tj = match j {
                0 => 1.0,
                1 => u,
                _ => {
                    let next = 2.0 * u * t - t_prev;
                    t_prev = t;
                    t = next;
                    next
                }
            };
            *slot = factor * tj;
        }
    }

    fn eval(&self, coeffs: &[f64], offset: f64, y: f64) -> f64 {
        let mut row = vec![0.0; self.len];
        self.row(y, &mut row);
        offset + row.iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Monomial coefficients in `y` of `offset + sum_j c_j basis_j(y)`.
    fn to_monomial(&self, coeffs: &[f64], offset: f64) -> Vec<f64> {
        let Interval { lo, hi } = self.interval;
        let scale = 2.0 / (hi - lo);
        let shift = -(lo + hi) / (hi - lo);
        // T_j(u(y)) as polynomials in y.
        let mut acc = vec![0.0; self.len + 1];
        let mut t_prev = vec![1.0];
        let mut t_cur = vec![shift, scale];
        for (j, &c) in coeffs.iter().enumerate() {
            let tj: &[f64] = match j {
                0 => &t_prev,
                1 => &t_cur,
                _ => {
                    let mut next = vec![0.0; t_cur.len() + 1];
                    for (i, &a) in t_cur.iter().enumerate() {
                        next[i] += 2.0 * shift * a;
                        next[i + 1] += 2.0 * scale * a;
                    }
                    for (i, &a) in t_prev.iter().enumerate() {
                        next[i] -= a;
                    }
                    t_prev = std::mem::replace(&mut t_cur, next);
                    &t_cur
                }
            };
            for (i, &a) in tj.iter().enumerate() {
                acc[i] += c * a;
            }
        }
        let mut out = if self.anchored {
            let mut shifted = vec![0.0; acc.len() + 1];
            for (i, &a) in acc.iter().enumerate() {
                shifted[i] -= lo * a;
                shifted[i + 1] += a;
            }
            shifted
        } else {
            acc
        };
        out[0] += offset;
        let degree = if self.anchored {
            self.len
        } else {
            self.len - 1
        };
        out.truncate(degree + 1);
        out
    }
}

fn horner(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &b| acc * y + b)
}

fn dense_grid(interval: Interval, degree: usize, kink: Option<f64>) -> Vec<f64> {
    let n = 4000 + 200 * degree;
    let mut pts = Vec::with_capacity(2 * n + 3);
    for i in 0..=n {
        let u = -(std::f64::consts::PI * i as f64 / n as f64).cos();
        pts.push(interval.from_unit(u));
        pts.push(interval.from_unit(-1.0 + 2.0 * i as f64 / n as f64));
    }
    if let Some(c) = kink {
        if c > interval.lo && c < interval.hi {
            pts.push(c);
        }
    }
    pts.push(interval.lo);
    pts.push(interval.hi);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

/// Maximizes `|err|` on `[a, b]` by golden-section search.
fn refine_extremum(err: &dyn Fn(f64) -> f64, a: f64, b: f64, start: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (err(c).abs(), err(d).abs());
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = err(c).abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = err(d).abs();
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let mid = 0.5 * (a + b);
    [start, mid].into_iter().fold(start, |best, y| {
        if err(y).abs() > err(best).abs() {
            y
        } else {
            best
        }
    })
}

/// One extremum per maximal run of constant error sign, refined locally.
fn alternating_extrema(grid: &[f64], err: &dyn Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let values: Vec<f64> = grid.iter().map(|&y| err(y)).collect();
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut run_best: Option<usize> = None;
    let mut run_sign = 0.0;
    let flush = |best: Option<usize>, out: &mut Vec<(f64, f64)>| {
        if let Some(i) = best {
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(grid.len() - 1)];
            let y = if i == 0 || i == grid.len() - 1 {
                grid[i]
            } else {
                refine_extremum(err, a, b, grid[i])
            };
            out.push((y, err(y)));
        }
    };
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let s = v.signum();
        if s != run_sign {
            flush(run_best, &mut out);
            run_sign = s;
            run_best = Some(i);
        } else if let Some(b) = run_best {
            if v.abs() > values[b].abs() {
                run_best = Some(i);
            }
        }
    }
    flush(run_best, &mut out);
    out
}

/// Reduces an alternating extremum list to exactly `want` points, keeping
/// alternation and the largest deviations.
fn select_reference(mut ext: Vec<(f64, f64)>, want: usize) -> Vec<(f64, f64)> {
    while ext.len() > want {
        let excess = ext.len() - want;
        let last = ext.len() - 1;
        if excess == 1 {
            if ext[0].1.abs() < ext[last].1.abs() {
                ext.remove(0);
            } else {
                ext.pop();
            }
            continue;
        }
        let (i, _) = ext
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.abs().total_cmp(&b.1 .1.abs()))
            .expect("nonempty");
        if i == 0 || i == last {
            ext.remove(i);
        } else {
            let j = if ext[i - 1].1.abs() < ext[i + 1].1.abs() {
                i - 1
            } else {
                i + 1
            };
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            ext.remove(hi);
            ext.remove(lo);
        }
    }
    ext
}

/// Replaces one reference point by `(y, e)` so that error signs still
/// alternate. Returns false if `y` is already a reference point.
fn single_exchange(reference: &mut Vec<f64>, (y, e): (f64, f64), err: &dyn Fn(f64) -> f64) -> bool {
    if reference.contains(&y) {
        return false;
    }
    let same = |r: f64| err(r).signum() == e.signum();
    let last = reference.len() - 1;
    if y < reference[0] {
        if same(reference[0]) {
            reference[0] = y;
        } else {
            reference.pop();
            reference.insert(0, y);
        }
    } else if y > reference[last] {
        if same(reference[last]) {
            reference[last] = y;
        } else {
            reference.remove(0);
            reference.push(y);
        }
    } else {
        let i = reference.partition_point(|&r| r < y) - 1;
        if same(reference[i]) {
            reference[i] = y;
        } else {
            reference[i + 1] = y;
        }
    }
    true
}

fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    a.lu().solve(&b)
}

fn sup_of(grid: &[f64], err: &dyn Fn(f64) -> f64) -> f64 {
    let on_grid = grid.iter().fold(0.0f64, |m, &y| m.max(err(y).abs()));
    alternating_extrema(grid, err)
        .iter()
        .fold(on_grid, |m, &(_, e)| m.max(e.abs()))
}

fn fit(target: Target, basis: Basis, degree: usize) -> Result<PolynomialApprox> {
    let interval = basis.interval;
    let offset = if basis.anchored {
        target.eval(interval.lo)
    } else {
        0.0
    };
    let grid = dense_grid(interval, degree, target.kink());
    let m = basis.len;

    // Chebyshev interpolant at first-kind nodes (shifted off the anchor).
    let nodes: Vec<f64> = (0..m)
        .map(|i| {
            let u = -((2 * i + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos();
            interval.from_unit(u)
        })
        .collect();
    let mut a = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    let mut row = vec![0.0; m];
    for (i, &y) in nodes.iter().enumerate() {
        basis.row(y, &mut row);
        for j in 0..m {
            a[(i, j)] = row[j];
        }
        rhs[i] = target.eval(y) - offset;
    }
    let interp = solve(a, rhs)
        .ok_or_else(|| Error::InvalidArgument("singular Chebyshev interpolation system".into()))?;
    let mut best: Vec<f64> = interp.iter().copied().collect();
    let err_of = |c: &[f64]| {
        let c = c.to_vec();
        move |y: f64| target.eval(y) - basis.eval(&c, offset, y)
    };
    let mut best_sup = sup_of(&grid, &err_of(&best));

    let mut reference = {
        let ext = alternating_extrema(&grid, &err_of(&best));
        if ext.len() > m {
            select_reference(ext, m + 1)
                .into_iter()
                .map(|(y, _)| y)
                .collect()
        } else {
            (0..=m)
                .map(|i| interval.from_unit(-(std::f64::consts::PI * i as f64 / m as f64).cos()))
                .collect::<Vec<f64>>()
        }
    };
    if basis.anchored {
        // The error vanishes at the anchor; keep reference points off it.
        let h = interval.hi - interval.lo;
        for y in reference.iter_mut() {
            if *y <= interval.lo {
                *y = interval.lo + 1e-6 * h;
            }
        }
    }

    for _ in 0..MAX_EXCHANGES {
        let mut a = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (i, &y) in reference.iter().enumerate() {
            basis.row(y, &mut row);
            for j in 0..m {
                a[(i, j)] = row[j];
            }
            a[(i, m)] = if i % 2 == 0 { 1.0 } else { -1.0 };
            rhs[i] = target.eval(y) - offset;
        }
        let Some(sol) = solve(a, rhs) else { break };
        let coeffs: Vec<f64> = sol.iter().take(m).copied().collect();
        if coeffs.iter().any(|c| !c.is_finite()) {
            break;
        }
        let err = err_of(&coeffs);
        let ext = alternating_extrema(&grid, &err);
        let sup = ext.iter().fold(
            grid.iter().fold(0.0f64, |acc, &y| acc.max(err(y).abs())),
            |acc, &(_, e)| acc.max(e.abs()),
        );
        if sup < best_sup {
            best_sup = sup;
            best = coeffs;
        }
        if ext.len() < m + 1 {
            // Too few sign runs for a full exchange: swap in the worst point only.
            let level = reference
                .iter()
                .fold(0.0f64, |acc, &y| acc.max(err(y).abs()));
            if sup == 0.0 || (sup - level) / sup < EXCHANGE_TOL {
                break;
            }
            let worst = ext
                .iter()
                .copied()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("nonempty extrema");
            if !single_exchange(&mut reference, worst, &err) {
                break;
            }
            continue;
        }
        let chosen = select_reference(ext, m + 1);
        let floor = chosen
            .iter()
            .fold(f64::INFINITY, |acc, &(_, e)| acc.min(e.abs()));
        reference = chosen.into_iter().map(|(y, _)| y).collect();
        if sup == 0.0 || (sup - floor) / sup < EXCHANGE_TOL {
            break;
        }
    }

    let coeffs = basis.to_monomial(&best, offset);
    let monomial_err = |y: f64| target.eval(y) - horner(&coeffs, y);
    let sup_error = sup_of(&grid, &monomial_err);
    Ok(PolynomialApprox {
        degree,
        coeffs,
        interval,
        sup_error,
        target: Some(target),
    })
}
