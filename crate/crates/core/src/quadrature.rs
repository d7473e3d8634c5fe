//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Panels are bisected dyadically until the fixed rule on a panel agrees with
//! the sum over its two halves. Integrable power singularities `s^p` at the
//! left endpoint are handled by a Gauss–Jacobi rule for the weight `s^p`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per panel of the base rule.
const ORDER: usize = 10;

/// Settings shared by every quadrature-backed operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Maximum number of panel evaluations per integral.
    pub panel_budget: usize,
    /// Target absolute error per integral.
    pub tolerance: f64,
    /// Integration radius (in unscaled kernel units) for kernels without
    /// compact support. `None` picks the radius where the profile drops below
    /// `1e-16` of its peak.
    pub truncation: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panel_budget: 200_000,
            tolerance: 1e-12,
            truncation: None,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.panel_budget == 0 {
            return Err(Error::InvalidParameter("panel budget must be nonzero".into()));
        }
        if let Some(r) = self.truncation {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "truncation radius must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Roots of `P_n` are found by Newton iteration from the Chebyshev guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * pn - p0) / (x * x - 1.0);
    (pn, d)
}

fn base_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Fixed `ORDER`-point rule on `[a, b]`.
pub fn fixed<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = base_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
) -> Result<f64> {
    adaptive_noisy(f, &|_| 0.0, a, b, tol, budget)
}

/// [`adaptive`] for an integrand known only up to a pointwise error bound
/// `noise(s)`; a panel is accepted once its error estimate falls below the
/// integrated noise.
pub fn adaptive_noisy<F, N>(f: &F, noise: &N, a: f64, b: f64, tol: f64, budget: usize) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
    N: Fn(f64) -> f64 + ?Sized,
{
    if a == b {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut used = 1usize;
    let mut stack = vec![(a, b, fixed(f, a, b), tol)];
    while let Some((lo, hi, whole, local_tol)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = fixed(f, lo, mid);
        let right = fixed(f, mid, hi);
        used += 2;
        let refined = left + right;
        let err = (refined - whole).abs();
        let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs()) + 4.0 * fixed(noise, lo, hi).abs();
        let tiny = (hi - lo).abs() <= 1e-13 * (1.0 + lo.abs().max(hi.abs()));
        if err <= local_tol.max(floor) || tiny {
            total += refined;
            continue;
        }
        if used > budget {
            return Err(Error::QuadratureBudget { a, b, budget });
        }
        stack.push((lo, mid, left, 0.5 * local_tol));
        stack.push((mid, hi, right, 0.5 * local_tol));
    }
    Ok(total)
}

/// Sum of adaptive integrals over consecutive sub-intervals of `breaks`.
///
/// The tolerance is distributed in proportion to sub-interval length.
pub fn adaptive_breaks<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    breaks: &[f64],
    tol: f64,
    budget: usize,
) -> Result<f64> {
    if breaks.len() < 2 {
        return Ok(0.0);
    }
    let span = (breaks[breaks.len() - 1] - breaks[0]).abs();
    if span == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let len = (w[1] - w[0]).abs();
        if len == 0.0 {
            continue;
        }
        total += adaptive(f, w[0], w[1], tol * len / span, budget)?;
    }
    Ok(total)
}

/// Nodes and weights on `[0, 1]` for the weight `x^beta`, `beta > -1`, by the
/// Golub–Welsch eigenvalue method on the Jacobi recurrence.
pub fn gauss_jacobi(n: usize, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && beta > -1.0);
    // weight (1+y)^b on [-1, 1]
    let b = beta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        *d = if k == 0 {
            b / (b + 2.0)
        } else {
            b * b / ((2.0 * kf + b) * (2.0 * kf + b + 2.0))
        };
    }
    for (i, o) in off.iter_mut().enumerate() {
        let k = (i + 1) as f64;
        let s = 2.0 * k + b;
        let sq = if i == 0 {
            4.0 * (1.0 + b) / ((2.0 + b) * (2.0 + b) * (3.0 + b))
        } else {
            4.0 * k * k * (k + b) * (k + b) / (s * s * (s + 1.0) * (s - 1.0))
        };
        *o = sq.sqrt();
    }
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    // mass of (1+y)^b on [-1, 1] is 2^(b+1)/(b+1); mapped to [0, 1] it is 1/(b+1)
    let mass = 1.0 / (b + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (1.0 + eig.eigenvalues[i]), mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    pairs.into_iter().unzip()
}

type Rule = (Vec<f64>, Vec<f64>);

fn jacobi_rule(n: usize, beta: f64) -> Rule {
    use std::collections::HashMap;
    use std::sync::Mutex;
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, beta.to_bits());
    if let Some(r) = cache.lock().unwrap().get(&key) {
        return r.clone();
    }
    let r = gauss_jacobi(n, beta);
    cache.lock().unwrap().insert(key, r.clone());
    r
}

/// Integral of `f` over `[0, b]` where `f(s) ~ s^p` as `s -> 0+`, `p > -1`.
///
/// For `p < 0` the integrand is split as `s^p h(s)` with `h` bounded. Near
/// the origin a Gauss–Jacobi rule for the weight `s^p` integrates `h`
/// without sampling it arbitrarily close to zero, where `f` is dominated by
/// roundoff; the panel shrinks until two rule orders agree. The rest of
/// `[0, b]` is done adaptively.
pub fn origin_singular<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    b: f64,
    p: f64,
    tol: f64,
    budget: usize,
) -> Result<f64> {
    origin_singular_noisy(f, &|_| 0.0, b, p, tol, budget)
}

/// [`origin_singular`] with a pointwise error bound on `f`, as in
/// [`adaptive_noisy`].
pub fn origin_singular_noisy<F, N>(f: &F, noise: &N, b: f64, p: f64, tol: f64, budget: usize) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
    N: Fn(f64) -> f64 + ?Sized,
{
    if p <= -1.0 {
        return Err(Error::NonConvergent(format!(
            "integrand exponent {p} at the origin is not integrable"
        )));
    }
    if p >= 0.0 {
        return adaptive_noisy(f, noise, 0.0, b, tol, budget);
    }
    let (x1, w1) = jacobi_rule(16, p);
    let (x2, w2) = jacobi_rule(24, p);
    let rule = |g: &dyn Fn(f64) -> f64, x: &[f64], w: &[f64], c: f64| {
        c.powf(p + 1.0) * x.iter().zip(w).map(|(x, w)| w * g(c * x) * (c * x).powf(-p)).sum::<f64>()
    };
    let mut c = b;
    let mut best: Option<(f64, f64, f64)> = None;
    for _ in 0..40 {
        let coarse = rule(&|s| f(s), &x1, &w1, c);
        let fine = rule(&|s| f(s), &x2, &w2, c);
        let diff = (fine - coarse).abs();
        let floor = 64.0 * f64::EPSILON * fine.abs() + 4.0 * rule(&|s| noise(s).abs(), &x2, &w2, c);
        if diff <= (0.5 * tol).max(floor) {
            best = Some((c, fine, diff));
            break;
        }
        if best.is_none_or(|(_, _, d)| diff < d) {
            best = Some((c, fine, diff));
        }
        c *= 0.25;
    }
    let (c, head, _) = best.expect("at least one panel size is tried");
    let rest = adaptive_noisy(f, noise, c, b, 0.5 * tol, budget)?;
    Ok(head + rest)
}

/// Sorts, clips to `[lo, hi]`, and deduplicates breakpoints, always
/// including both ends.
pub fn normalize_breaks(lo: f64, hi: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = std::iter::once(lo)
        .chain(extra.into_iter().filter(|x| *x > lo && *x < hi))
        .chain(std::iter::once(hi))
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = 1e-14 * (1.0 + lo.abs().max(hi.abs()));
    v.dedup_by(|a, b| (*a - *b).abs() <= scale);
    if let Some(last) = v.last_mut() {
        *last = hi;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 20] {
            let (x, w) = gauss_legendre(n);
            let sum_w: f64 = w.iter().sum();
            assert_relative_eq!(sum_w, 2.0, epsilon = 1e-14);
            // degree 2n-1 exact
            let deg = 2 * n - 2;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_relative_eq!(approx, 2.0 / (deg as f64 + 1.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn adaptive_handles_kink() {
        let v = adaptive(&|x: f64| x.abs(), -1.0, 2.0, 1e-13, 10_000).unwrap();
        assert_relative_eq!(v, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn origin_singular_power() {
        // integral of s^-0.5 over [0, 1] is 2
        let v = origin_singular(&|s: f64| s.powf(-0.5), 1.0, -0.5, 1e-13, 10_000).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
        let v = origin_singular(&|s: f64| s.powf(-0.9) * s.cos(), 2.0, -0.9, 1e-12, 10_000).unwrap();
        // reference by series: sum (-1)^n 2^(2n+0.1) / ((2n)! (2n+0.1))
        let mut r = 0.0;
        let mut fact = 1.0;
        for n in 0..30 {
            if n > 0 {
                fact *= (2 * n - 1) as f64 * (2 * n) as f64;
            }
            let e = 2.0 * n as f64 + 0.1;
            r += (-1f64).powi(n) * 2f64.powf(e) / (fact * e);
        }
        assert_relative_eq!(v, r, epsilon = 1e-10);
    }

    #[test]
    fn jacobi_rule_moments() {
        for beta in [-0.9, -0.5, 0.0, 0.5, 2.0] {
            let (x, w) = gauss_jacobi(12, beta);
            for j in 0..20 {
                let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(j)).sum();
                assert_relative_eq!(v, 1.0 / (beta + j as f64 + 1.0), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn origin_singular_survives_cancellation() {
        // (sin(1+s) - sin(1-s)) s^-1.5 cancels catastrophically near 0
        let f = |s: f64| ((1.0 + s).sin() - (1.0 - s).sin()) * s.powf(-1.5);
        let v = origin_singular(&f, 1.0, -0.5, 1e-12, 100_000).unwrap();
        // 2 cos(1) * integral of sin(s) s^-1.5 over [0, 1], by series
        let mut r = 0.0;
        let mut fact = 1.0;
        for n in 0..25 {
            if n > 0 {
                fact *= (2 * n) as f64 * (2 * n + 1) as f64;
            }
            let e = 2.0 * n as f64 + 0.5;
            r += (-1f64).powi(n) / (fact * e);
        }
        assert_relative_eq!(v, 2.0 * 1f64.cos() * r, epsilon = 1e-11);
    }

    #[test]
    fn non_integrable_exponent_is_an_error() {
        assert!(origin_singular(&|s: f64| 1.0 / s, 1.0, -1.0, 1e-10, 100).is_err());
    }

    #[test]
    fn budget_exhaustion_reported() {
        let r = adaptive(&|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-15, 50);
        assert!(matches!(r, Err(Error::QuadratureBudget { .. })));
    }

    #[test]
    fn breaks_are_normalized() {
        let b = normalize_breaks(0.0, 1.0, [0.5, 0.5, 2.0, -1.0, 0.25]);
        assert_eq!(b, vec![0.0, 0.25, 0.5, 1.0]);
    }
}
