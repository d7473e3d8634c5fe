//! Anti-symmetric kernel profiles, their moments, ε-scaling, and admissibility
//! checks.
//!
//! A profile `α` is stored through its restriction to `s > 0`; values at
//! negative arguments follow from `α(-s) = -α(s)`, except for tabulated
//! profiles that carry samples on both half-lines, which are interpolated
//! as given and then checked for anti-symmetry.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureConfig};

/// How the profile behaves at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    Compact,
    ExponentialType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlatnessCase {
    /// `α(0+)` finite; `α(s) - α(0+)` is gauged by `-K s^k`, `k > 0`.
    FiniteLimit,
    /// `α(0+) = ∞`; `α(s)` is gauged by `K s^k`, `-2 < k < 0`.
    Singular,
}

/// Power-law gauge of the profile near `s = 0+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    pub k_alpha: f64,
    pub b_alpha: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub case: FlatnessCase,
}

impl Flatness {
    /// Structural constraints on the record itself (signs, ordering of the
    /// constants, exponent range for the declared case).
    pub fn validate(&self) -> Result<()> {
        let f = self;
        if !(f.b_alpha > 0.0 && f.k_plus > 0.0 && f.k_minus > 0.0) {
            return Err(Error::InvalidParameter(
                "flatness record needs b_alpha, K_plus, K_minus > 0".into(),
            ));
        }
        if !f.k_alpha.is_finite() || f.k_alpha <= -2.0 || f.k_alpha == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "flatness exponent {} outside (-2,0)∪(0,∞)",
                f.k_alpha
            )));
        }
        Ok(())
    }

    fn case_consistent(&self) -> bool {
        match self.case {
            FlatnessCase::FiniteLimit => self.k_alpha > 0.0 && self.k_minus >= self.k_plus,
            FlatnessCase::Singular => {
                self.k_alpha > -2.0 && self.k_alpha < 0.0 && self.k_minus <= self.k_plus
            }
        }
    }
}

/// Catalogue names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelName {
    Indicator,
    Exponential,
    Sine,
    Power,
    Flat,
}

impl KernelName {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelName::Indicator => "indicator",
            KernelName::Exponential => "exponential",
            KernelName::Sine => "sine",
            KernelName::Power => "power",
            KernelName::Flat => "flat",
        }
    }
}

impl fmt::Display for KernelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "indicator" => Ok(KernelName::Indicator),
            "exponential" | "exp" => Ok(KernelName::Exponential),
            "sine" | "sin" => Ok(KernelName::Sine),
            "power" => Ok(KernelName::Power),
            "flat" => Ok(KernelName::Flat),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }
}

/// Tabulated samples `(s, α(s))`, sorted by `s`, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

impl Table {
    fn interpolate(&self, s: f64) -> f64 {
        let xs = &self.s;
        let n = xs.len();
        if s < xs[0] {
            return if xs[0] > 0.0 { self.values[0] } else { 0.0 };
        }
        if s > xs[n - 1] {
            return 0.0;
        }
        let i = match xs.partition_point(|x| *x <= s) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        if x1 == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }

    fn two_sided(&self) -> bool {
        self.s[0] < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Profile {
    /// `α(s) = s 1_{(-1,1)}(s)`
    Indicator,
    /// `α(s) = sgn(s) e^{-|s|}`
    Exponential,
    /// `α(s) = sin(πs) 1_{(-1,1)}(s)`
    Sine,
    /// `α(s) = sgn(s) |s|^k 1_{(0,1)}(|s|)`
    Power { k_alpha: f64 },
    /// `α(s) = sgn(s) (1 - e^{-s^{-2}}) 1_{(0,1)}(|s|)`, flatter than any power at 0.
    Flat,
    Tabulated(Table),
}

type MomentCache = Arc<Mutex<HashMap<(u32, bool), f64>>>;

/// An unscaled anti-symmetric kernel `α` with its metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelProfile {
    name: String,
    profile: Profile,
    support_radius: Option<f64>,
    decay_class: DecayClass,
    flatness: Option<Flatness>,
    positivity_radius: f64,
    #[serde(skip)]
    moment_cache: MomentCache,
}

impl PartialEq for KernelProfile {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.profile == other.profile
            && self.support_radius == other.support_radius
            && self.flatness == other.flatness
    }
}

/// Builds a catalogue kernel. `k_alpha` is required for `power` and ignored
/// otherwise.
pub fn builtin_kernel(name: KernelName, k_alpha: Option<f64>) -> Result<KernelProfile> {
    match name {
        KernelName::Indicator => Ok(KernelProfile::indicator()),
        KernelName::Exponential => Ok(KernelProfile::exponential()),
        KernelName::Sine => Ok(KernelProfile::sine()),
        KernelName::Flat => Ok(KernelProfile::flat()),
        KernelName::Power => {
            let k = k_alpha.ok_or_else(|| {
                Error::InvalidParameter("power kernel requires k_alpha".into())
            })?;
            KernelProfile::power(k)
        }
    }
}

impl KernelProfile {
    fn new(
        name: &str,
        profile: Profile,
        support_radius: Option<f64>,
        decay_class: DecayClass,
        flatness: Option<Flatness>,
        positivity_radius: f64,
    ) -> Self {
        Self {
            name: name.to_string(),
            profile,
            support_radius,
            decay_class,
            flatness,
            positivity_radius,
            moment_cache: Arc::default(),
        }
    }

    pub fn indicator() -> Self {
        Self::new("indicator", Profile::Indicator, Some(1.0), DecayClass::Compact, None, 1.0)
    }

    /// `sgn(s) e^{-|s|}` with the case-(i) gauge `-s ≤ e^{-s} - 1 ≤ -0.75 s`
    /// on `(0, 1/2)`.
    pub fn exponential() -> Self {
        let flat = Flatness {
            k_alpha: 1.0,
            b_alpha: 0.5,
            k_plus: 0.75,
            k_minus: 1.0,
            case: FlatnessCase::FiniteLimit,
        };
        Self::new(
            "exponential",
            Profile::Exponential,
            None,
            DecayClass::ExponentialType,
            Some(flat),
            1.0,
        )
    }

    pub fn sine() -> Self {
        Self::new("sine", Profile::Sine, Some(1.0), DecayClass::Compact, None, 1.0)
    }

    pub fn flat() -> Self {
        Self::new("flat", Profile::Flat, Some(1.0), DecayClass::Compact, None, 1.0)
    }

    /// `sgn(s)|s|^k` on `(-1, 1)`, gauged exactly by `K± = 1`, `b = 1`.
    pub fn power(k_alpha: f64) -> Result<Self> {
        if !k_alpha.is_finite() || k_alpha <= -2.0 || k_alpha == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "power exponent {k_alpha} outside (-2,0)∪(0,∞)"
            )));
        }
        let case = if k_alpha < 0.0 {
            FlatnessCase::Singular
        } else {
            FlatnessCase::FiniteLimit
        };
        let flat = Flatness {
            k_alpha,
            b_alpha: 1.0,
            k_plus: 1.0,
            k_minus: 1.0,
            case,
        };
        Ok(Self::new(
            &format!("power(k_alpha={k_alpha})"),
            Profile::Power { k_alpha },
            Some(1.0),
            DecayClass::Compact,
            Some(flat),
            1.0,
        ))
    }

    /// Profile given by samples. Samples on `s ≥ 0` only are extended by
    /// anti-symmetry; samples on both sides are used as given.
    pub fn tabulated(
        name: &str,
        s: Vec<f64>,
        values: Vec<f64>,
        support_radius: f64,
        flatness: Option<Flatness>,
    ) -> Result<Self> {
        if s.len() != values.len() || s.len() < 2 {
            return Err(Error::InvalidParameter(
                "tabulated kernel needs at least two (s, value) pairs".into(),
            ));
        }
        if s.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("tabulated kernel has non-finite entries".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("tabulated s must be strictly increasing".into()));
        }
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(Error::InvalidParameter("support radius must be positive".into()));
        }
        if let Some(f) = &flatness {
            f.validate()?;
        }
        Ok(Self::new(
            name,
            Profile::Tabulated(Table { s, values }),
            Some(support_radius),
            DecayClass::Compact,
            flatness,
            support_radius,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    pub fn decay_class(&self) -> DecayClass {
        self.decay_class
    }

    pub fn flatness(&self) -> Option<&Flatness> {
        self.flatness.as_ref()
    }

    /// Replaces the flatness record (e.g. a user-declared gauge).
    pub fn with_flatness(mut self, flatness: Option<Flatness>) -> Result<Self> {
        if let Some(f) = &flatness {
            f.validate()?;
        }
        self.flatness = flatness;
        self.moment_cache = Arc::default();
        Ok(self)
    }

    /// `a_α`: the interval `(0, a_α)` on which `β` must be strictly decreasing.
    pub fn positivity_radius(&self) -> f64 {
        self.positivity_radius
    }

    /// Exponent `p` with `α(s) ~ s^p` as `s -> 0+`, when `p < 0`.
    pub fn origin_exponent(&self) -> Option<f64> {
        match &self.profile {
            Profile::Power { k_alpha } if *k_alpha < 0.0 => Some(*k_alpha),
            Profile::Tabulated(_) => self
                .flatness
                .filter(|f| f.case == FlatnessCase::Singular)
                .map(|f| f.k_alpha),
            _ => None,
        }
    }

    /// `α(s)`; zero at `s = 0`.
    pub fn eval(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        if let Profile::Tabulated(t) = &self.profile {
            if t.two_sided() {
                if s.abs() > self.support_radius.unwrap_or(f64::INFINITY) {
                    return 0.0;
                }
                return t.interpolate(s);
            }
        }
        let v = self.half(s.abs());
        if s < 0.0 {
            -v
        } else {
            v
        }
    }

    /// `β(x) = α(x)` for `x > 0`.
    pub fn half(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        match &self.profile {
            Profile::Indicator => {
                if x < 1.0 {
                    x
                } else {
                    0.0
                }
            }
            Profile::Exponential => (-x).exp(),
            Profile::Sine => {
                if x < 1.0 {
                    (std::f64::consts::PI * x).sin()
                } else {
                    0.0
                }
            }
            Profile::Power { k_alpha } => {
                if x > 0.0 && x < 1.0 {
                    x.powf(*k_alpha)
                } else {
                    0.0
                }
            }
            Profile::Flat => {
                if x > 0.0 && x < 1.0 {
                    -(-1.0 / (x * x)).exp_m1()
                } else {
                    0.0
                }
            }
            Profile::Tabulated(t) => {
                if x > self.support_radius.unwrap_or(f64::INFINITY) {
                    0.0
                } else {
                    t.interpolate(x)
                }
            }
        }
    }

    /// Radius beyond which `s^j |α(s)|` is negligible: the support radius for
    /// compact profiles, otherwise where it falls below `1e-16` of its peak.
    pub fn integration_radius(&self, j: u32, truncation: Option<f64>) -> Result<f64> {
        if let Some(r) = self.support_radius {
            return Ok(r);
        }
        if let Some(r) = truncation {
            return Ok(r);
        }
        let g = |s: f64| s.powi(j as i32) * self.half(s).abs();
        let step = 0.25;
        let mut peak = 0.0f64;
        let mut argmax = 0.0;
        let mut s = step;
        while s < 1e5 {
            let v = g(s);
            if v > peak {
                peak = v;
                argmax = s;
            }
            if s > argmax && v < 1e-16 * peak {
                return Ok(s);
            }
            s += step;
        }
        Err(Error::NonConvergent(format!(
            "profile `{}` does not decay within |s| < 1e5",
            self.name
        )))
    }

    /// Breakpoints on `(0, r)` where the profile is not smooth, plus unit
    /// spacing on long ranges.
    pub(crate) fn half_breaks(&self, r: f64) -> Vec<f64> {
        let mut extra: Vec<f64> = Vec::new();
        if let Profile::Tabulated(t) = &self.profile {
            extra.extend(t.s.iter().copied().filter(|x| *x > 0.0));
        }
        let mut x = 1.0;
        while x < r {
            extra.push(x);
            x += 1.0;
        }
        quadrature::normalize_breaks(0.0, r, extra)
    }

    /// `∫_0^R g(s) α(s) ds` over the positive half-line, where `g(s) ~ s^q`
    /// as `s -> 0+`. The panel touching the origin uses the singular rule
    /// when the combined exponent is negative.
    pub(crate) fn half_integral<G: Fn(f64) -> f64 + ?Sized>(
        &self,
        g: &G,
        q: f64,
        extra_breaks: &[f64],
        radius: f64,
        tol: f64,
        budget: usize,
    ) -> Result<f64> {
        self.half_integral_noisy(g, 0.0, q, extra_breaks, radius, tol, budget)
    }

    /// `∫_0^R g(s) β(s) ds` where `g(s) ~ s^q` near the origin and `g` is
    /// computed with absolute error up to `noise`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn half_integral_noisy<G: Fn(f64) -> f64 + ?Sized>(
        &self,
        g: &G,
        noise: f64,
        q: f64,
        extra_breaks: &[f64],
        radius: f64,
        tol: f64,
        budget: usize,
    ) -> Result<f64> {
        let mut breaks = self.half_breaks(radius);
        if !extra_breaks.is_empty() {
            breaks = quadrature::normalize_breaks(
                0.0,
                radius,
                breaks.into_iter().chain(extra_breaks.iter().copied()),
            );
        }
        let f = |s: f64| g(s) * self.half(s);
        let n = |s: f64| noise * self.half(s).abs();
        let span = radius;
        let mut total = 0.0;
        for (i, w) in breaks.windows(2).enumerate() {
            let len = w[1] - w[0];
            let local = tol * len / span;
            if i == 0 {
                if let Some(p) = self.origin_exponent() {
                    total += quadrature::origin_singular_noisy(&f, &n, w[1], p + q, local, budget)?;
                    continue;
                }
            }
            total += quadrature::adaptive_noisy(&f, &n, w[0], w[1], local, budget)?;
        }
        Ok(total)
    }

    /// `α_(j) = ∫ s^j α(s) ds` or, with `absolute`, `|α|_(j) = ∫ |s|^j |α(s)| ds`.
    ///
    /// Even signed moments vanish by anti-symmetry and are returned as exact
    /// zeros. Odd moments are twice the half-line integral.
    pub fn moment(&self, j: u32, absolute: bool) -> Result<f64> {
        self.moment_with(j, absolute, &QuadratureConfig::default())
    }

    pub fn moment_with(&self, j: u32, absolute: bool, cfg: &QuadratureConfig) -> Result<f64> {
        let two_sided = matches!(&self.profile, Profile::Tabulated(t) if t.two_sided());
        if !absolute && j.is_multiple_of(2) && !two_sided {
            return Ok(0.0);
        }
        if let Some(v) = self.moment_cache.lock().unwrap().get(&(j, absolute)) {
            return Ok(*v);
        }
        if let Some(k) = self.origin_exponent() {
            if j as f64 + k <= -1.0 {
                return Err(Error::NonConvergent(format!(
                    "moment j={j} of a kernel with k_alpha={k} diverges at the origin"
                )));
            }
        }
        let r = self.integration_radius(j, cfg.truncation)?;
        let scale = self.moment_scale(j, r);
        let tol = (cfg.tolerance * scale).max(1e-300);
        let value = if two_sided {
            let f = |s: f64| {
                let a = self.eval(s);
                if absolute {
                    s.abs().powi(j as i32) * a.abs()
                } else {
                    s.powi(j as i32) * a
                }
            };
            let mut br = self.half_breaks(r);
            let neg: Vec<f64> = br.iter().rev().map(|x| -x).collect();
            br.remove(0);
            let all: Vec<f64> = neg.into_iter().chain(br).collect();
            quadrature::adaptive_breaks(&f, &all, tol, cfg.panel_budget)?
        } else {
            let g = |s: f64| s.powi(j as i32);
            let half = if absolute {
                let h = |s: f64| s.powi(j as i32) * self.half(s).abs();
                let mut total = 0.0;
                let br = self.half_breaks(r);
                for (i, w) in br.windows(2).enumerate() {
                    let local = tol * (w[1] - w[0]) / r;
                    if i == 0 {
                        if let Some(p) = self.origin_exponent() {
                            total +=
                                quadrature::origin_singular(&h, w[1], p + j as f64, local, cfg.panel_budget)?;
                            continue;
                        }
                    }
                    total += quadrature::adaptive(&h, w[0], w[1], local, cfg.panel_budget)?;
                }
                total
            } else {
                self.half_integral(&g, j as f64, &[], r, tol, cfg.panel_budget)?
            };
            2.0 * half
        };
        if !value.is_finite() {
            return Err(Error::NonConvergent(format!("moment j={j} is not finite")));
        }
        self.moment_cache.lock().unwrap().insert((j, absolute), value);
        Ok(value)
    }

    /// Rough magnitude of `∫ s^j |α|`, used to turn relative tolerances into
    /// absolute ones.
    fn moment_scale(&self, j: u32, r: f64) -> f64 {
        let n = 64;
        let mut acc = 0.0;
        for i in 1..=n {
            let s = r * i as f64 / n as f64;
            acc += s.powi(j as i32) * self.half(s).abs();
        }
        (acc * r / n as f64).max(1e-30)
    }

    /// `α_(1)`, required finite and nonzero.
    pub fn dipole(&self) -> Result<f64> {
        let a1 = self.moment(1, false)?;
        if !a1.is_finite() || a1 == 0.0 {
            return Err(Error::Precondition(format!(
                "dipole moment of `{}` is {a1}; it must be finite and nonzero",
                self.name
            )));
        }
        Ok(a1)
    }
}

/// `α_ε(s) = σ_ε α(s/ε)` with `σ_ε = 1/(ε² α_(1))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledKernel {
    base: KernelProfile,
    epsilon: f64,
    sigma: f64,
    dipole: f64,
}

impl PartialEq for ScaledKernel {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.epsilon == other.epsilon
    }
}

/// Applies the nonlocality scale `ε` to a profile.
pub fn scale(k: &KernelProfile, epsilon: f64) -> Result<ScaledKernel> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let dipole = k.dipole()?;
    Ok(ScaledKernel {
        base: k.clone(),
        epsilon,
        sigma: 1.0 / (epsilon * epsilon * dipole),
        dipole,
    })
}

impl ScaledKernel {
    pub fn base(&self) -> &KernelProfile {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `α_(1)` of the unscaled profile.
    pub fn dipole(&self) -> f64 {
        self.dipole
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.sigma * self.base.eval(s / self.epsilon)
    }

    /// Same profile at a different `ε`.
    pub fn rescale(&self, epsilon: f64) -> Result<ScaledKernel> {
        scale(&self.base, epsilon)
    }

    /// Radius of the scaled kernel's effective support.
    pub fn radius(&self, cfg: &QuadratureConfig) -> Result<f64> {
        Ok(self.epsilon * self.base.integration_radius(0, cfg.truncation)?)
    }

    pub fn describe(&self) -> String {
        format!("{} (epsilon={})", self.base.name, self.epsilon)
    }
}

/// Sampling parameters for [`check_admissibility`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Points in the symmetric anti-symmetry grid.
    pub samples: usize,
    /// Largest `j` in the analytic-class surrogate.
    pub j_max: u32,
    /// Relative tolerance for the pointwise inequalities.
    pub tolerance: f64,
    /// Largest fraction of `(0, a_α)` on which consecutive samples of `β`
    /// may coincide exactly and still count as strictly decreasing a.e.
    /// Guards against plateaus that are only floating-point saturation.
    pub plateau_fraction: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            samples: 1 << 12,
            j_max: 12,
            tolerance: 1e-12,
            plateau_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntisymmetryCheck {
    pub ok: bool,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleCheck {
    pub ok: bool,
    pub alpha_1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticClassCheck {
    pub ok: bool,
    /// Fitted constant `A` (the `j = 1` ratio).
    pub a_fit: Option<f64>,
    /// `|α|_(j) / j!` for `j = 1..=j_max`.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityCheck {
    pub ok: bool,
    pub nonnegative: bool,
    pub nonincreasing: bool,
    pub strictly_decreasing_near_origin: bool,
    pub a_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessCheck {
    pub ok: bool,
    pub record_present: bool,
    pub case_consistent: bool,
    pub sandwich_ok: bool,
    pub k_inequality_ok: bool,
    pub alpha_0_plus: Option<f64>,
    pub max_sandwich_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub kernel: String,
    pub antisymmetry: AntisymmetryCheck,
    pub dipole: DipoleCheck,
    pub analytic_class: AnalyticClassCheck,
    pub positivity: PositivityCheck,
    pub flatness: FlatnessCheck,
    pub admissible: bool,
}

/// Named flags of an [`AdmissibilityReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Requirement {
    Antisymmetry,
    Dipole,
    Analytic,
    Positivity,
    Flatness,
}

impl Requirement {
    pub const ALL: [Requirement; 5] = [
        Requirement::Antisymmetry,
        Requirement::Dipole,
        Requirement::Analytic,
        Requirement::Positivity,
        Requirement::Flatness,
    ];
}

impl FromStr for Requirement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "antisymmetry" | "anti-symmetry" => Ok(Requirement::Antisymmetry),
            "dipole" => Ok(Requirement::Dipole),
            "analytic" | "analytic-class" => Ok(Requirement::Analytic),
            "positivity" => Ok(Requirement::Positivity),
            "flatness" => Ok(Requirement::Flatness),
            other => Err(Error::InvalidParameter(format!("unknown requirement `{other}`"))),
        }
    }
}

impl AdmissibilityReport {
    pub fn passes(&self, req: Requirement) -> bool {
        match req {
            Requirement::Antisymmetry => self.antisymmetry.ok,
            Requirement::Dipole => self.dipole.ok,
            Requirement::Analytic => self.analytic_class.ok,
            Requirement::Positivity => self.positivity.ok,
            Requirement::Flatness => self.flatness.ok,
        }
    }
}

/// Evaluates every admissibility condition by sampling and quadrature.
/// Failures are reported in the returned flags, never as errors.
pub fn check_admissibility(k: &KernelProfile, config: &CheckConfig) -> AdmissibilityReport {
    let n = config.samples.max(16);
    let tol = config.tolerance;

    let radius = k.integration_radius(0, None).unwrap_or(1.0);
    let mut max_violation = 0.0f64;
    let mut peak = 0.0f64;
    for i in 1..=n / 2 {
        let s = radius * i as f64 / (n / 2) as f64;
        let (p, m) = (k.eval(s), k.eval(-s));
        peak = peak.max(p.abs());
        max_violation = max_violation.max((p + m).abs());
    }
    let rel_violation = if peak > 0.0 { max_violation / peak } else { max_violation };
    let antisymmetry = AntisymmetryCheck {
        ok: rel_violation <= tol,
        max_violation: rel_violation,
    };

    let alpha_1 = k.moment(1, false).ok();
    let dipole = DipoleCheck {
        ok: matches!(alpha_1, Some(a) if a.is_finite() && a != 0.0),
        alpha_1,
    };

    let mut ratios = Vec::new();
    let mut factorial = 1.0f64;
    let mut analytic_ok = true;
    for j in 1..=config.j_max {
        factorial *= j as f64;
        match k.moment(j, true) {
            Ok(m) => ratios.push(m / factorial),
            Err(_) => {
                analytic_ok = false;
                break;
            }
        }
    }
    let a_fit = ratios.first().copied();
    if let Some(a) = a_fit {
        analytic_ok &= ratios.iter().all(|r| *r <= a * (1.0 + 1e-8));
    } else {
        analytic_ok = false;
    }
    let analytic_class = AnalyticClassCheck {
        ok: analytic_ok,
        a_fit,
        ratios,
    };

    let positivity = check_positivity(k, n, config);
    let flatness = check_flatness(k, n, config);

    let admissible =
        antisymmetry.ok && dipole.ok && analytic_class.ok && positivity.ok && flatness.ok;
    AdmissibilityReport {
        kernel: k.name.clone(),
        antisymmetry,
        dipole,
        analytic_class,
        positivity,
        flatness,
        admissible,
    }
}

fn check_positivity(k: &KernelProfile, n: usize, config: &CheckConfig) -> PositivityCheck {
    let radius = k.integration_radius(0, None).unwrap_or(1.0);
    let a = k.positivity_radius().min(radius);
    let tol = config.tolerance;
    let samples: Vec<(f64, f64)> = (1..n)
        .map(|i| {
            let s = radius * i as f64 / n as f64;
            (s, k.half(s))
        })
        .collect();
    let peak = samples.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let nonnegative = samples.iter().all(|(_, v)| *v >= -tol * peak);
    let nonincreasing = samples
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 + tol * w[0].1.abs().max(peak * f64::EPSILON));
    let near: Vec<&(f64, f64)> = samples.iter().filter(|(s, _)| *s < a).collect();
    let flat_steps = near.windows(2).filter(|w| w[1].1 >= w[0].1).count();
    let strictly = near.len() >= 2
        && near[near.len() - 1].1 < near[0].1
        && (flat_steps as f64) <= config.plateau_fraction * (near.len() - 1) as f64;
    PositivityCheck {
        ok: nonnegative && nonincreasing && strictly,
        nonnegative,
        nonincreasing,
        strictly_decreasing_near_origin: strictly,
        a_alpha: a,
    }
}

fn check_flatness(k: &KernelProfile, n: usize, config: &CheckConfig) -> FlatnessCheck {
    let Some(f) = k.flatness() else {
        return FlatnessCheck {
            ok: false,
            record_present: false,
            case_consistent: false,
            sandwich_ok: false,
            k_inequality_ok: false,
            alpha_0_plus: None,
            max_sandwich_violation: f64::NAN,
        };
    };
    let tol = config.tolerance.max(1e-10);
    let case_consistent = f.case_consistent() && f.b_alpha <= k.positivity_radius() * (1.0 + tol);

    let alpha_0_plus = match f.case {
        FlatnessCase::FiniteLimit => Some(k.half(1e-12 * f.b_alpha)),
        FlatnessCase::Singular => None,
    };
    let mut worst = 0.0f64;
    for i in 1..n {
        let s = f.b_alpha * i as f64 / n as f64;
        let g = s.powf(f.k_alpha);
        let (lo, hi, val) = match f.case {
            FlatnessCase::FiniteLimit => {
                let a0 = alpha_0_plus.unwrap_or(0.0);
                (-f.k_minus * g, -f.k_plus * g, k.half(s) - a0)
            }
            FlatnessCase::Singular => (f.k_minus * g, f.k_plus * g, k.half(s)),
        };
        let scale = g.abs().max(f64::MIN_POSITIVE);
        let v = ((lo - val).max(val - hi)).max(0.0) / scale;
        worst = worst.max(v);
    }
    let sandwich_ok = worst <= tol;

    let k_inequality_ok = (1..n).all(|i| {
        let s = i as f64 / n as f64;
        let (a, b) = ((s + 1.0).powf(f.k_alpha), s.powf(f.k_alpha));
        let v = match f.case {
            FlatnessCase::FiniteLimit => f.k_plus * a - f.k_minus * b,
            FlatnessCase::Singular => f.k_minus * b - f.k_plus * a,
        };
        v >= -tol * a.max(b)
    });

    FlatnessCheck {
        ok: case_consistent && sandwich_ok && k_inequality_ok,
        record_present: true,
        case_consistent,
        sandwich_ok,
        k_inequality_ok,
        alpha_0_plus,
        max_sandwich_violation: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn catalogue_values() {
        let ind = builtin_kernel(KernelName::Indicator, None).unwrap();
        assert_eq!(ind.eval(0.5), 0.5);
        assert_eq!(ind.support_radius(), Some(1.0));
        let e = builtin_kernel(KernelName::Exponential, None).unwrap();
        assert_eq!(e.eval(-1.0), -(-1.0f64).exp());
        let p = builtin_kernel(KernelName::Power, Some(-1.5)).unwrap();
        let f = p.flatness().unwrap();
        assert_eq!(f.case, FlatnessCase::Singular);
        assert_eq!((f.k_plus, f.k_minus), (1.0, 1.0));
    }

    #[test]
    fn bad_names_and_exponents() {
        assert!(matches!("triangle".parse::<KernelName>(), Err(Error::UnknownKernel(_))));
        assert!(KernelProfile::power(-2.5).is_err());
        assert!(KernelProfile::power(0.0).is_err());
        assert!(KernelProfile::power(-2.0).is_err());
        assert!(builtin_kernel(KernelName::Power, None).is_err());
    }

    #[test]
    fn even_moments_are_exact_zeros() {
        for k in [KernelProfile::indicator(), KernelProfile::exponential(), KernelProfile::sine()] {
            assert_eq!(k.moment(2, false).unwrap(), 0.0);
            assert_eq!(k.moment(4, false).unwrap(), 0.0);
        }
    }

    #[test]
    fn singular_moment_divergence() {
        let p = KernelProfile::power(-1.5).unwrap();
        assert!(matches!(p.moment(0, true), Err(Error::NonConvergent(_))));
        assert_relative_eq!(p.moment(1, false).unwrap(), 4.0, epsilon = 1e-11);
    }

    #[test]
    fn scale_rejects_bad_epsilon() {
        let e = KernelProfile::exponential();
        assert!(scale(&e, 0.0).is_err());
        assert!(scale(&e, f64::NAN).is_err());
        assert!(scale(&e, -1.0).is_err());
    }

    #[test]
    fn zero_dipole_rejected() {
        // symmetric-looking table whose right half integrates s*alpha to zero
        let t = KernelProfile::tabulated("odd-null", vec![0.0, 0.5, 1.0], vec![1.0, -1.0, 0.0], 1.0, None)
            .unwrap();
        let d = t.moment(1, false).unwrap();
        if d.abs() < 1e-12 {
            assert!(scale(&t, 1.0).is_err());
        }
    }

    #[test]
    fn tabulated_matches_closed_form() {
        let s: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
        let v: Vec<f64> = s.to_vec();
        let t = KernelProfile::tabulated("tab-indicator", s, v, 1.0, None).unwrap();
        assert_relative_eq!(t.moment(1, false).unwrap(), 2.0 / 3.0, epsilon = 1e-10);
        assert_relative_eq!(t.eval(-0.25), -0.25, epsilon = 1e-14);
    }

    #[test]
    fn flatness_record_validation() {
        let bad = Flatness {
            k_alpha: -2.5,
            b_alpha: 1.0,
            k_plus: 1.0,
            k_minus: 1.0,
            case: FlatnessCase::Singular,
        };
        assert!(bad.validate().is_err());
        assert!(KernelProfile::indicator().with_flatness(Some(bad)).is_err());
    }

    #[test]
    fn requirement_parsing() {
        assert_eq!("positivity".parse::<Requirement>().unwrap(), Requirement::Positivity);
        assert!("smoothness".parse::<Requirement>().is_err());
    }
}
