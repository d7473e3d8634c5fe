//! Fourier side of the operator: the real odd spectrum `iα̂_ε(ξ)`, its real
//! zeros, and the near-/far-field bound certificates.
//!
//! With `û(ξ) = ∫ e^{-2πiξt} u(t) dt`, the transform of an anti-symmetric
//! kernel is purely imaginary and
//!
//! ```text
//! iα̂_ε(ξ) = 2/(ε α_(1)) ∫_0^∞ sin(2πεξ s) α(s) ds,
//! ```
//!
//! which is what every function here returns. The operator acts on Fourier
//! modes as `D̂u(ξ) = i · iα̂_ε(ξ) · û(ξ)`, so `iα̂_ε(ξ) ≈ 2πξ` near the origin.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{FlatnessCase, KernelProfile, Profile, ScaledKernel};
use crate::quadrature::{self, QuadratureConfig};

const TWO_PI: f64 = 2.0 * PI;

/// Which evaluation route produced a spectrum value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumForm {
    ClosedForm,
    Quadrature,
}

/// `iα̂_ε` bound to a scaled kernel.
#[derive(Debug, Clone)]
pub struct KernelSpectrum {
    source: ScaledKernel,
    form: SpectrumForm,
    quad: QuadratureConfig,
}

impl KernelSpectrum {
    /// Uses the closed form when the catalogue provides one.
    pub fn new(source: &ScaledKernel) -> Self {
        let form = if has_closed_form(source.base()) {
            SpectrumForm::ClosedForm
        } else {
            SpectrumForm::Quadrature
        };
        Self {
            source: source.clone(),
            form,
            quad: QuadratureConfig::default(),
        }
    }

    pub fn with_form(source: &ScaledKernel, form: SpectrumForm) -> Result<Self> {
        if form == SpectrumForm::ClosedForm && !has_closed_form(source.base()) {
            return Err(Error::InvalidParameter(format!(
                "no closed-form spectrum for `{}`",
                source.base().name()
            )));
        }
        Ok(Self {
            source: source.clone(),
            form,
            quad: QuadratureConfig::default(),
        })
    }

    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn source(&self) -> &ScaledKernel {
        &self.source
    }

    pub fn form(&self) -> SpectrumForm {
        self.form
    }

    pub fn eval(&self, xi: f64) -> Result<f64> {
        match self.form {
            SpectrumForm::ClosedForm => Ok(transform_closed_form(&self.source, xi)
                .expect("closed form checked at construction")),
            SpectrumForm::Quadrature => transform_quadrature(&self.source, xi, &self.quad),
        }
    }
}

fn has_closed_form(k: &KernelProfile) -> bool {
    matches!(k.profile(), Profile::Indicator | Profile::Exponential | Profile::Sine)
}

/// `sin(x)/x` with the removable point filled in.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `x - sin x`, accurate for small `x`.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.25 {
        let x2 = x * x;
        // Horner form of x^3/3! - x^5/5! + x^7/7! - x^9/9! + x^11/11!
        x * x2
            * (1.0 / 6.0
                - x2 * (1.0 / 120.0
                    - x2 * (1.0 / 5040.0 - x2 * (1.0 / 362_880.0 - x2 / 39_916_800.0))))
    } else {
        x - x.sin()
    }
}

/// `(sin a - a cos a)/a²` for the indicator kernel.
fn indicator_core(a: f64) -> f64 {
    if a.abs() < 0.25 {
        // sum_{n>=1} (-1)^{n+1} 2n a^{2n-1} / (2n+1)!
        let a2 = a * a;
        a * (1.0 / 3.0 - a2 * (1.0 / 30.0 - a2 * (1.0 / 840.0 - a2 * (1.0 / 45_360.0))))
    } else {
        (a.sin() - a * a.cos()) / (a * a)
    }
}

/// Closed-form `iα̂_ε(ξ)` for catalogue kernels that have one.
pub fn transform_closed_form(s: &ScaledKernel, xi: f64) -> Option<f64> {
    let eps = s.epsilon();
    let a = TWO_PI * eps * xi;
    if xi == 0.0 {
        return matches!(
            s.base().profile(),
            Profile::Exponential | Profile::Indicator | Profile::Sine
        )
        .then_some(0.0);
    }
    match s.base().profile() {
        Profile::Exponential => Some(TWO_PI * xi / (1.0 + a * a)),
        Profile::Indicator => Some(3.0 / eps * indicator_core(a)),
        // -sin(a)/(ε((a/π)² - 1)) rewritten around the removable point a = π.
        Profile::Sine => {
            let b = a.abs();
            let v = PI * PI / eps * sinc(b - PI) / (b + PI);
            Some(if a < 0.0 { -v } else { v })
        }
        _ => None,
    }
}

/// `iα̂_ε(ξ)` by oscillatory quadrature of the sine transform, with panels no
/// longer than a quarter period.
pub fn transform_quadrature(s: &ScaledKernel, xi: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    if xi < 0.0 {
        return transform_quadrature(s, -xi, cfg).map(|v| -v);
    }
    let eps = s.epsilon();
    let omega = TWO_PI * eps * xi;
    let half = sine_weighted(s.base(), omega, cfg, |x| x.sin())?;
    let v = 2.0 / (eps * s.dipole()) * half;
    if !v.is_finite() {
        return Err(Error::NonConvergent(format!("spectrum at xi={xi} is not finite")));
    }
    Ok(v)
}

/// `∫_0^R w(ω s) α(s) ds` for a weight with `w(x) ~ x^q`, `q ≥ 1`, near zero.
fn sine_weighted<W: Fn(f64) -> f64>(
    k: &KernelProfile,
    omega: f64,
    cfg: &QuadratureConfig,
    w: W,
) -> Result<f64> {
    let r = k.integration_radius(0, cfg.truncation)?;
    let quarter = 0.5 * PI / omega;
    let mut extra = Vec::new();
    if quarter < r {
        let n = (r / quarter).ceil() as usize;
        extra.extend((1..n).map(|i| i as f64 * quarter));
    }
    let g = |x: f64| w(omega * x);
    k.half_integral(&g, 1.0, &extra, r, cfg.tolerance, cfg.panel_budget)
}

/// `iα̂_ε(ξ)`, closed form when available.
pub fn transform(s: &ScaledKernel, xi: f64) -> Result<f64> {
    match transform_closed_form(s, xi) {
        Some(v) => Ok(v),
        None => transform_quadrature(s, xi, &QuadratureConfig::default()),
    }
}

/// `2πξ - iα̂_ε(ξ)`, evaluated without cancellation for small `εξ`.
pub fn deficit(s: &ScaledKernel, xi: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    if xi < 0.0 {
        return deficit(s, -xi).map(|v| -v);
    }
    let eps = s.epsilon();
    let a = TWO_PI * eps * xi;
    match s.base().profile() {
        Profile::Exponential => return Ok(TWO_PI * xi * (a * a) / (1.0 + a * a)),
        Profile::Indicator if a < 0.25 => {
            // a - 3(sin a - a cos a)/a² = sum_{n>=2} (-1)^n 6n a^{2n-1}/(2n+1)!
            let a2 = a * a;
            let series = a * a2 * (1.0 / 10.0 - a2 * (1.0 / 280.0 - a2 * (1.0 / 15_120.0)));
            return Ok(series / eps);
        }
        _ => {}
    }
    if a >= 1.0 {
        return Ok(TWO_PI * xi - transform(s, xi)?);
    }
    let half = sine_weighted(s.base(), a, &QuadratureConfig::default(), x_minus_sin)?;
    Ok(2.0 / (eps * s.dipole()) * half)
}

/// `β̂_ε(ξ) = 2π/iα̂_ε(ξ) - 1/ξ`, computed as `(2πξ - iα̂_ε)/(ξ · iα̂_ε)`.
///
/// Returns the continuous extension `0` at `ξ = 0`.
pub fn beta_correction(s: &ScaledKernel, xi: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    let a = transform(s, xi)?;
    if a == 0.0 || a.abs() <= 1e-14 * TWO_PI * xi.abs() {
        return Err(Error::SpectralZero(xi));
    }
    Ok(deficit(s, xi)? / (xi * a))
}

/// One real zero of the unscaled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub xi: f64,
    pub multiplicity: u32,
}

/// Nonnegative real zeros on `[0, window]`; negative zeros follow by
/// reflection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub kernel: String,
    /// `None` for the unscaled spectrum.
    pub epsilon: Option<f64>,
    pub window: f64,
    pub zeros: Vec<Zero>,
}

impl ZeroSet {
    /// Zeros of `iα̂_ε` obtained from the unscaled ones by `ξ̄_j / ε`.
    pub fn scaled(&self, epsilon: f64) -> ZeroSet {
        ZeroSet {
            kernel: self.kernel.clone(),
            epsilon: Some(epsilon),
            window: self.window / epsilon,
            zeros: self
                .zeros
                .iter()
                .map(|z| Zero {
                    xi: z.xi / epsilon,
                    multiplicity: z.multiplicity,
                })
                .collect(),
        }
    }

    /// All zeros on `[-window, window]` in increasing order.
    pub fn signed(&self) -> Vec<Zero> {
        let mut v: Vec<Zero> = self
            .zeros
            .iter()
            .rev()
            .filter(|z| z.xi > 0.0)
            .map(|z| Zero {
                xi: -z.xi,
                multiplicity: z.multiplicity,
            })
            .collect();
        v.extend(self.zeros.iter().copied());
        v
    }

    /// Positive zeros, excluding `ξ̄_0 = 0`.
    pub fn nonzero(&self) -> impl Iterator<Item = &Zero> {
        self.zeros.iter().filter(|z| z.xi > 0.0)
    }
}

/// Settings for [`find_zeros_of`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroSearch {
    /// Samples per unit of `ξ`.
    pub resolution: usize,
    /// Bisection stops once the bracket is below `tolerance · max(1, |ξ|)`.
    pub tolerance: f64,
    /// A root has multiplicity above one when `|f'|` falls below this.
    pub derivative_threshold: f64,
    /// Touchpoints (no sign change) count as zeros below this `|f|`.
    pub touch_tolerance: f64,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        Self {
            resolution: 64,
            tolerance: 1e-12,
            derivative_threshold: 1e-6,
            touch_tolerance: 1e-10,
        }
    }
}

/// Zeros of an odd real function on `[0, window]`.
///
/// Sign changes between samples are bisected; local minima of `|f|` without
/// a sign change are refined by golden-section search and kept when they
/// reach `touch_tolerance` (even multiplicity).
pub fn find_zeros_of<F>(f: &F, window: f64, search: &ZeroSearch) -> Result<Vec<Zero>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(window >= 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter(format!("window must be nonnegative, got {window}")));
    }
    if search.resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let step = 1.0 / search.resolution as f64;
    let n = (window / step).ceil() as usize + 1;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let ys: Vec<f64> = xs.par_iter().map(|x| f(*x)).collect::<Result<_>>()?;
    let limit = window * (1.0 + 1e-12) + 1e-12;

    let mut roots = vec![Zero {
        xi: 0.0,
        multiplicity: multiplicity_at(f, 0.0, step, search)?,
    }];
    let mut i = 1;
    while i < xs.len() - 1 {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (y0, y1) = (ys[i], ys[i + 1]);
        if y0 == 0.0 {
            roots.push(Zero { xi: x0, multiplicity: multiplicity_at(f, x0, step, search)? });
        } else if y0.signum() != y1.signum() && y1 != 0.0 {
            let r = bisect(f, x0, x1, y0, search.tolerance)?;
            roots.push(Zero { xi: r, multiplicity: multiplicity_at(f, r, step, search)? });
        } else if y1 != 0.0
            && y0.abs() < ys[i - 1].abs()
            && y0.abs() <= y1.abs()
            && y0.signum() == ys[i - 1].signum()
        {
            let r = golden_min(f, xs[i - 1], x1, search.tolerance)?;
            if f(r)?.abs() <= search.touch_tolerance {
                roots.push(Zero { xi: r, multiplicity: multiplicity_at(f, r, step, search)?.max(2) });
            }
        }
        i += 1;
    }
    roots.retain(|z| z.xi <= limit);
    roots.dedup_by(|a, b| (a.xi - b.xi).abs() <= 10.0 * search.tolerance * a.xi.abs().max(1.0));
    Ok(roots)
}

fn bisect<F>(f: &F, mut lo: f64, mut hi: f64, mut flo: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    for _ in 0..200 {
        if hi - lo <= tol * lo.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn golden_min<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?.abs();
    let mut fd = f(d)?.abs();
    for _ in 0..200 {
        if b - a <= tol * a.abs().max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?.abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?.abs();
        }
    }
    Ok(0.5 * (a + b))
}

/// Order of the first finite-difference derivative whose magnitude clears
/// the threshold (capped at 4).
fn multiplicity_at<F>(f: &F, x: f64, step: f64, search: &ZeroSearch) -> Result<u32>
where
    F: Fn(f64) -> Result<f64>,
{
    let h = (1e-3 * step).max(1e-6 * x.abs().max(1.0));
    let fm2 = f(x - 2.0 * h)?;
    let fm1 = f(x - h)?;
    let f0 = f(x)?;
    let fp1 = f(x + h)?;
    let fp2 = f(x + 2.0 * h)?;
    let d1 = (fp1 - fm1) / (2.0 * h);
    if d1.abs() >= search.derivative_threshold {
        return Ok(1);
    }
    let d2 = (fp1 - 2.0 * f0 + fm1) / (h * h);
    if d2.abs() >= search.derivative_threshold {
        return Ok(2);
    }
    let d3 = (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h);
    if d3.abs() >= search.derivative_threshold {
        return Ok(3);
    }
    Ok(4)
}

/// Real zeros of the unscaled spectrum (the `ε = 1` transform) on
/// `[0, window]`, sampled at `resolution` points per unit `ξ`.
pub fn find_zeros(k: &KernelProfile, window: f64, resolution: usize) -> Result<ZeroSet> {
    let s = crate::kernels::scale(k, 1.0)?;
    let search = ZeroSearch {
        resolution,
        ..ZeroSearch::default()
    };
    let mut set = find_scaled_zeros(&s, window, &search)?;
    set.epsilon = None;
    Ok(set)
}

/// Real zeros of `iα̂_ε` itself on `[0, window]` (scaled units).
pub fn find_scaled_zeros(s: &ScaledKernel, window: f64, search: &ZeroSearch) -> Result<ZeroSet> {
    let spec = KernelSpectrum::new(s);
    let f = |x: f64| spec.eval(x);
    let zeros = find_zeros_of(&f, window, search)?;
    Ok(ZeroSet {
        kernel: s.base().name().to_string(),
        epsilon: Some(s.epsilon()),
        window,
        zeros,
    })
}

/// One sampled inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub xi: f64,
    pub lower: f64,
    pub value: f64,
    /// `None` when the bound is one-sided.
    pub upper: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub kernel: String,
    pub epsilon: f64,
    /// `C_α = 4π³ α_(3) / (3 α_(1))`.
    pub c_alpha: f64,
    /// Far-field constant; present on far-field certificates.
    pub c_prime_alpha: Option<f64>,
    /// `2π b_α - C_α/(4 b_α)`; present when a flatness record exists.
    pub positivity_margin: Option<f64>,
    pub checks: Vec<BoundCheck>,
    pub ok: bool,
}

/// Relative slack allowed on certificate inequalities.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-10;

/// `C_α = 4π³ α_(3) / (3 α_(1))`.
pub fn c_alpha(k: &KernelProfile) -> Result<f64> {
    let a1 = k.dipole()?;
    let a3 = k.moment(3, false)?;
    Ok(4.0 * PI.powi(3) * a3 / (3.0 * a1))
}

/// Far-field constant from the flatness record:
/// `C'_α = [1/(2^k α_(1))] ∫_0^1 sin(πs) [bracket] ds`, with bracket
/// `K+ (s+1)^k - K- s^k` in the finite-limit case and
/// `K- s^k - K+ (s+1)^k` in the singular case.
pub fn c_prime_alpha(k: &KernelProfile) -> Result<f64> {
    let f = k
        .flatness()
        .ok_or_else(|| Error::Precondition(format!("kernel `{}` has no flatness record", k.name())))?;
    let a1 = k.dipole()?;
    let ka = f.k_alpha;
    let bracket = |s: f64| {
        let (near, far) = (s.powf(ka), (s + 1.0).powf(ka));
        let b = match f.case {
            FlatnessCase::FiniteLimit => f.k_plus * far - f.k_minus * near,
            FlatnessCase::Singular => f.k_minus * near - f.k_plus * far,
        };
        (PI * s).sin() * b
    };
    let p = if ka < 0.0 { ka + 1.0 } else { 0.0 };
    let cfg = QuadratureConfig::default();
    let mut integral = quadrature::origin_singular(&bracket, 0.5, p, 1e-14, cfg.panel_budget)?;
    integral += quadrature::adaptive(&bracket, 0.5, 1.0, 1e-14, cfg.panel_budget)?;
    Ok(integral / (2f64.powf(ka) * a1))
}

/// `2π b_α - C_α/(4 b_α)`.
pub fn positivity_margin(k: &KernelProfile) -> Result<f64> {
    let f = k
        .flatness()
        .ok_or_else(|| Error::Precondition(format!("kernel `{}` has no flatness record", k.name())))?;
    let c = c_alpha(k)?;
    Ok(TWO_PI * f.b_alpha - c / (4.0 * f.b_alpha))
}

/// Checks `2π|ξ| - C_α ε²|ξ|³ ≤ iα̂_ε(|ξ|) ≤ 2π|ξ|` at every sample.
pub fn near_field_certificate(s: &ScaledKernel, xis: &[f64]) -> Result<BoundCertificate> {
    let c = c_alpha(s.base())?;
    let eps = s.epsilon();
    let spec = KernelSpectrum::new(s);
    let checks = xis
        .par_iter()
        .map(|&xi| {
            let x = xi.abs();
            let value = spec.eval(x)?;
            let upper = TWO_PI * x;
            let lower = upper - c * eps * eps * x.powi(3);
            let slack = CERTIFICATE_TOLERANCE * upper.max(f64::MIN_POSITIVE);
            let ok = lower - slack <= value && value <= upper + slack;
            Ok(BoundCheck { xi, lower, value, upper: Some(upper), ok })
        })
        .collect::<Result<Vec<_>>>()?;
    let margin = positivity_margin(s.base()).ok();
    Ok(BoundCertificate {
        kernel: s.base().name().to_string(),
        epsilon: eps,
        c_alpha: c,
        c_prime_alpha: None,
        positivity_margin: margin,
        ok: checks.iter().all(|c| c.ok),
        checks,
    })
}

/// Checks `iα̂_ε(|ξ|) ≥ C'_α ε^{-2-k} |ξ|^{-1-k}` on `|ξ| ≥ 1/(2 ε b_α)`.
pub fn far_field_certificate(s: &ScaledKernel, xis: &[f64]) -> Result<BoundCertificate> {
    let base = s.base();
    let f = *base
        .flatness()
        .ok_or_else(|| Error::Precondition(format!("kernel `{}` has no flatness record", base.name())))?;
    let eps = s.epsilon();
    let threshold = far_field_threshold(s)?;
    if let Some(bad) = xis.iter().find(|x| x.abs() < threshold * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!(
            "xi = {bad} lies inside the near field |xi| < {threshold}"
        )));
    }
    let cp = c_prime_alpha(base)?;
    let c = c_alpha(base)?;
    let k = f.k_alpha;
    let spec = KernelSpectrum::new(s);
    let checks = xis
        .par_iter()
        .map(|&xi| {
            let x = xi.abs();
            let value = spec.eval(x)?;
            let lower = cp * eps.powf(-2.0 - k) * x.powf(-1.0 - k);
            let ok = value >= lower * (1.0 - CERTIFICATE_TOLERANCE);
            Ok(BoundCheck { xi, lower, value, upper: None, ok })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCertificate {
        kernel: base.name().to_string(),
        epsilon: eps,
        c_alpha: c,
        c_prime_alpha: Some(cp),
        positivity_margin: positivity_margin(base).ok(),
        ok: checks.iter().all(|c| c.ok),
        checks,
    })
}

/// Start of the far-field region, `1/(2 ε b_α)`.
pub fn far_field_threshold(s: &ScaledKernel) -> Result<f64> {
    let f = s.base().flatness().ok_or_else(|| {
        Error::Precondition(format!("kernel `{}` has no flatness record", s.base().name()))
    })?;
    Ok(1.0 / (2.0 * s.epsilon() * f.b_alpha))
}
