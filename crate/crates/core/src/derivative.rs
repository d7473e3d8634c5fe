//! The nonlocal derivative `D_{α,ε}u(t) = ∫ α_ε(s) u(t+s) ds` applied by
//! quadrature, its Taylor error bound, and weak pairings.
//!
//! The integral is evaluated in odd-symmetrized form
//! `∫_0^∞ α_ε(s) [u(t+s) - u(t-s)] ds`, which annihilates constants exactly.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Profile, ScaledKernel};
pub use crate::quadrature::QuadratureConfig;

/// Uniform samples `values[i] = u(a + i h)`, `h = (b - a)/N`, `N` a power of
/// two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    a: f64,
    b: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!("invalid grid domain [{a}, {b}]")));
        }
        let n = values.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 2, got {n}"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid value {i} is not finite")));
        }
        Ok(Self { a, b, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> Result<Self> {
        let h = (b - a) / n as f64;
        Self::new(a, b, (0..n).map(|i| f(a + i as f64 * h)).collect())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.values.len() as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.a + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                self.len(),
                values.len()
            )));
        }
        Self::new(self.a, self.b, values)
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Self {
        let values = (0..self.len()).map(|i| f(self.t(i), self.values[i])).collect();
        Self { a: self.a, b: self.b, values }
    }

    /// Interval covered by the samples, `[a, b - h]`.
    pub fn data_domain(&self) -> (f64, f64) {
        (self.a, self.b - self.spacing())
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        let tol = 1e-12 * (self.b - self.a);
        self.len() == other.len() && (self.a - other.a).abs() <= tol && (self.b - other.b).abs() <= tol
    }

    /// Piecewise-cubic (four-point Lagrange) interpolant; `None` outside the
    /// data domain.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.data_domain();
        let h = self.spacing();
        let slack = 1e-12 * h;
        if t < lo - slack || t > hi + slack {
            return None;
        }
        let n = self.len();
        let x = ((t - self.a) / h).clamp(0.0, (n - 1) as f64);
        let cell = (x.floor() as usize).min(n - 2);
        if n < 4 {
            let f = x - cell as f64;
            return Some(self.values[cell] * (1.0 - f) + self.values[cell + 1] * f);
        }
        let start = cell.saturating_sub(1).min(n - 4);
        let u = x - start as f64;
        let y = &self.values[start..start + 4];
        // Lagrange basis on nodes 0, 1, 2, 3
        let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        Some(y[0] * l0 + y[1] * l1 + y[2] * l2 + y[3] * l3)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}

/// Anything the operator can be applied to.
pub trait Sampled: Sync {
    fn value(&self, t: f64) -> f64;

    /// Interval on which `value` is defined; `None` for the whole line.
    fn data_domain(&self) -> Option<(f64, f64)>;

    /// Points where `u` is not smooth, restricted to `[t - r, t + r]`.
    fn kinks_near(&self, t: f64, r: f64) -> Vec<f64>;
}

impl Sampled for GridFunction {
    fn value(&self, t: f64) -> f64 {
        self.interpolate(t).unwrap_or(f64::NAN)
    }

    fn data_domain(&self) -> Option<(f64, f64)> {
        Some(GridFunction::data_domain(self))
    }

    fn kinks_near(&self, t: f64, r: f64) -> Vec<f64> {
        let h = self.spacing();
        let first = (((t - r - self.a) / h).floor().max(0.0)) as usize;
        let last = ((((t + r - self.a) / h).ceil()) as usize).min(self.len() - 1);
        (first..=last).map(|i| self.t(i)).collect()
    }
}

/// A function on the whole line, with optional non-smooth points.
pub struct Callable<F> {
    f: F,
    kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> Callable<F> {
    pub fn new(f: F) -> Self {
        Self { f, kinks: Vec::new() }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }
}

impl<F: Fn(f64) -> f64 + Sync> Sampled for Callable<F> {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn data_domain(&self) -> Option<(f64, f64)> {
        None
    }

    fn kinks_near(&self, t: f64, r: f64) -> Vec<f64> {
        self.kinks.iter().copied().filter(|k| (k - t).abs() <= r).collect()
    }
}

/// `D_{α,ε}u` at each of `points`.
///
/// For sampled inputs every kernel window `[t - r, t + r]` must lie inside
/// the data; points that would need extrapolation are rejected.
pub fn apply<U: Sampled + ?Sized>(
    s: &ScaledKernel,
    u: &U,
    points: &[f64],
    q: &QuadratureConfig,
) -> Result<Vec<f64>> {
    q.validate()?;
    let eps = s.epsilon();
    let radius = s.base().integration_radius(0, q.truncation)?;
    let r = eps * radius;
    if let Some((lo, hi)) = u.data_domain() {
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if let Some(t) = points.iter().find(|t| **t - r < lo - slack || **t + r > hi + slack) {
            return Err(Error::OutsideDomain { t: *t, a: lo, b: hi });
        }
    }
    let prefactor = 1.0 / (eps * s.dipole());
    points
        .par_iter()
        .map(|&t| {
            let g = |x: f64| u.value(t + eps * x) - u.value(t - eps * x);
            let breaks: Vec<f64> = u
                .kinks_near(t, r)
                .into_iter()
                .map(|k| (k - t).abs() / eps)
                .filter(|x| *x > 0.0 && *x < radius)
                .collect();
            let tol = q.tolerance / prefactor;
            // roundoff in the difference of two samples of u
            let scale = [-1.0, -0.5, 0.0, 0.5, 1.0]
                .iter()
                .fold(0.0f64, |m, x| m.max(u.value(t + x * r).abs()));
            let noise = 16.0 * f64::EPSILON * scale;
            let half = s
                .base()
                .half_integral_noisy(&g, noise, 1.0, &breaks, radius, tol, q.panel_budget)?;
            Ok(prefactor * half)
        })
        .collect()
}

/// `D_{α,ε}u` sampled on the uniform grid `a + i (b-a)/n`.
pub fn apply_to_grid<U: Sampled + ?Sized>(
    s: &ScaledKernel,
    u: &U,
    a: f64,
    b: f64,
    n: usize,
    q: &QuadratureConfig,
) -> Result<GridFunction> {
    let h = (b - a) / n as f64;
    let pts: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
    GridFunction::new(a, b, apply(s, u, &pts, q)?)
}

/// Guaranteed bound `ε |α|_(2) / (2|α_(1)|) · sup|u''|` on
/// `sup|D_{α,ε}u - u'|`.
pub fn taylor_bound(s: &ScaledKernel, sup_u2: f64) -> Result<f64> {
    if !(sup_u2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("sup|u''| must be nonnegative, got {sup_u2}")));
    }
    let abs2 = s.base().moment(2, true)?;
    Ok(s.epsilon() * abs2 / (2.0 * s.dipole().abs()) * sup_u2)
}

/// Trapezoid approximation of `∫ f ψ` on a shared grid.
pub fn weak_pairing(f: &GridFunction, psi: &GridFunction) -> Result<f64> {
    if !f.same_grid(psi) {
        return Err(Error::GridMismatch(format!(
            "[{}, {}] x {} vs [{}, {}] x {}",
            f.a, f.b, f.len(), psi.a, psi.b, psi.len()
        )));
    }
    let n = f.len();
    let inner: f64 = f.values.iter().zip(&psi.values).map(|(x, y)| x * y).sum();
    let ends = 0.5 * (f.values[0] * psi.values[0] + f.values[n - 1] * psi.values[n - 1]);
    Ok(f.spacing() * (inner - ends))
}

/// `sup_t |D_{α,ε} g_n(t)|` for `g_n(t) = exp(nπit/ε)`, with the real and
/// imaginary parts applied separately. Only meaningful for the sine kernel.
pub fn annihilation_residual(s: &ScaledKernel, n: i64, q: &QuadratureConfig) -> Result<f64> {
    if !matches!(s.base().profile(), Profile::Sine) {
        return Err(Error::Precondition(format!(
            "annihilation residual is defined for the sine kernel, not `{}`",
            s.base().name()
        )));
    }
    let eps = s.epsilon();
    let w = n as f64 * PI / eps;
    let pts: Vec<f64> = (0..=128).map(|i| -1.0 + i as f64 / 64.0).collect();
    let re = apply(s, &Callable::new(|t: f64| (w * t).cos()), &pts, q)?;
    let im = apply(s, &Callable::new(|t: f64| (w * t).sin()), &pts, q)?;
    Ok(re.iter().chain(&im).fold(0.0f64, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{scale, KernelProfile};
    use approx::assert_relative_eq;

    #[test]
    fn grid_validation() {
        assert!(GridFunction::new(0.0, 1.0, vec![0.0; 3]).is_err());
        assert!(GridFunction::new(1.0, 0.0, vec![0.0; 4]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![0.0, f64::NAN]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![0.0; 1]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![0.0; 2]).is_ok());
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = GridFunction::from_fn(-1.0, 1.0, 16, |t| t * t * t - 2.0 * t + 0.5).unwrap();
        for t in [-1.0, -0.93, -0.1, 0.0, 0.37, 0.8, 0.875] {
            let v = g.interpolate(t).unwrap();
            assert_relative_eq!(v, t * t * t - 2.0 * t + 0.5, epsilon = 1e-12);
        }
        assert!(g.interpolate(0.9).is_none());
    }

    #[test]
    fn outside_domain_rejected() {
        let s = scale(&KernelProfile::indicator(), 0.5).unwrap();
        let g = GridFunction::from_fn(-2.0, 2.0, 64, |t| t).unwrap();
        let r = apply(&s, &g, &[1.8], &QuadratureConfig::default());
        assert!(matches!(r, Err(Error::OutsideDomain { .. })));
        let ok = apply(&s, &g, &[0.0, 1.0], &QuadratureConfig::default()).unwrap();
        for v in ok {
            assert_relative_eq!(v, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn pairing_grid_mismatch() {
        let f = GridFunction::from_fn(0.0, 1.0, 8, |t| t).unwrap();
        let g = GridFunction::from_fn(0.0, 2.0, 8, |t| t).unwrap();
        assert!(matches!(weak_pairing(&f, &g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn annihilation_needs_sine_kernel() {
        let s = scale(&KernelProfile::exponential(), 0.25).unwrap();
        assert!(annihilation_residual(&s, 2, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn taylor_bound_zero_for_affine() {
        let s = scale(&KernelProfile::indicator(), 0.3).unwrap();
        assert_eq!(taylor_bound(&s, 0.0).unwrap(), 0.0);
        assert!(taylor_bound(&s, -1.0).is_err());
    }
}
