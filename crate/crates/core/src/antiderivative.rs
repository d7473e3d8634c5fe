//! Nonlocal antidifferentiation: solving `D_{α,ε}u = F` by spectral division.
//!
//! # Discrete convention
//!
//! `F` is sampled at `t_j = -T + j h`, `h = 2T/N`. The continuous transform
//! `F̂(ξ) = ∫ e^{-2πiξt} F(t) dt` is approximated on the bins `ξ_k = k/(2T)`
//! (`k` in FFT order, `k ≥ N/2` meaning `k - N`) by
//!
//! ```text
//! F̂(ξ_k) ≈ h · e^{2πi ξ_k T} · Σ_j F(t_j) e^{-2πi jk/N} = h (-1)^k FFT[F]_k,
//! ```
//!
//! and the inverse by `u(t_j) ≈ (1/2T) Σ_k û(ξ_k) e^{2πi ξ_k t_j}`. The phase
//! factors `(-1)^k` and the scalings `h · 1/(2T) = 1/N` cancel in the round
//! trip, so the solve is `u = IFFT[m · FFT[F]] / N` with the multiplier
//! `m(ξ_k) = -i / iα̂_ε(ξ_k)` evaluated on the physical frequencies above.
//!
//! The `ξ = 0` bin cannot be divided. The grid mean `F̄` is removed before the
//! division and restored through the exact ramp `F̄ t`, using `D_{α,ε} t = 1`.
//! The remaining freedom is the constant, fixed by [`ConstantPolicy`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::derivative::{apply, GridFunction, QuadratureConfig};
use crate::error::{Error, Result};
use crate::kernels::{scale, KernelProfile, ScaledKernel};
use crate::spectral::{self, KernelSpectrum};

/// How the arbitrary constant of the solution is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantPolicy {
    /// Grid mean of the particular solution is zero.
    #[default]
    ZeroMean,
    /// Grid mean of the particular solution equals the given value.
    FixedValue(f64),
}


impl fmt::Display for ConstantPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstantPolicy::ZeroMean => f.write_str("zero-mean"),
            ConstantPolicy::FixedValue(c) => write!(f, "fixed-value:{c}"),
        }
    }
}

impl FromStr for ConstantPolicy {
    type Err = Error;

    /// `zero-mean` or `fixed-value:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero-mean" {
            return Ok(ConstantPolicy::ZeroMean);
        }
        if let Some(v) = s.strip_prefix("fixed-value:").or_else(|| s.strip_prefix("fixed-value=")) {
            let c: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad constant in `{s}`")))?;
            return Ok(ConstantPolicy::FixedValue(c));
        }
        Err(Error::Parse(format!("unknown constant policy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// `T`: the solve runs on `[-T, T)`, periodized.
    pub half_width: f64,
    /// Sample count, a power of two.
    pub n: usize,
    /// `τ`: bins with `|iα̂_ε| ≤ τ · max|iα̂_ε|` are null modes.
    pub null_threshold: f64,
    pub constant_policy: ConstantPolicy,
    /// `F` must satisfy `max(|F(-T)|, |F(T-h)|) ≤ boundary_tolerance · sup|F|`.
    pub boundary_tolerance: f64,
    /// Fail instead of warning when the boundary condition is violated.
    pub strict: bool,
    /// Number of interior points used for the residual.
    pub residual_samples: usize,
}

impl SolverConfig {
    pub fn new(half_width: f64, n: usize) -> Self {
        Self {
            half_width,
            n,
            null_threshold: 1e-8,
            constant_policy: ConstantPolicy::ZeroMean,
            boundary_tolerance: 1e-3,
            strict: false,
            residual_samples: 257,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "half width must be positive, got {}",
                self.half_width
            )));
        }
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "N must be a power of two >= 4, got {}",
                self.n
            )));
        }
        if !(self.null_threshold > 0.0 && self.null_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "null threshold must lie in (0, 1), got {}",
                self.null_threshold
            )));
        }
        Ok(())
    }

    /// Grid of this configuration with samples of `f`.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Result<GridFunction> {
        GridFunction::from_fn(-self.half_width, self.half_width, self.n, f)
    }
}

/// A homogeneous mode `t^k e^{2πiξt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullMode {
    pub xi: f64,
    pub k: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntiderivativeResult {
    pub particular: GridFunction,
    /// Frequencies where the division was suppressed, always including `(0, 0)`.
    pub null_modes: Vec<NullMode>,
    /// `sup|D_{α,ε}(particular) - F|` over sampled interior points.
    pub residual: f64,
    /// Grid mean `F̄`, the slope of the restored ramp.
    pub mean_slope: f64,
    pub warnings: Vec<String>,
}

/// Solves `D_{α,ε}u = F` on the periodized grid of `cfg`.
pub fn solve(s: &ScaledKernel, f: &GridFunction, cfg: &SolverConfig) -> Result<AntiderivativeResult> {
    cfg.validate()?;
    let t = cfg.half_width;
    let n = cfg.n;
    let expected = GridFunction::new(-t, t, vec![0.0; n])?;
    if !f.same_grid(&expected) {
        return Err(Error::GridMismatch(format!(
            "F is sampled on [{}, {}) x {}, config expects [{}, {}) x {}",
            f.a(),
            f.b(),
            f.len(),
            -t,
            t,
            n
        )));
    }

    let mut warnings = Vec::new();
    let sup_f = f.sup_norm();
    let edge = f.values()[0].abs().max(f.values()[n - 1].abs());
    if sup_f > 0.0 && edge > cfg.boundary_tolerance * sup_f {
        let msg = format!(
            "F does not decay at the boundary: |F| = {edge:.3e} vs sup|F| = {sup_f:.3e}"
        );
        if cfg.strict {
            return Err(Error::Precondition(msg));
        }
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let dxi = 1.0 / (2.0 * t);
    let half = n / 2;
    let spec = KernelSpectrum::new(s);
    // bins 1..half-1; the Nyquist bin is dropped
    let bins: Vec<(f64, f64)> = (1..half)
        .into_par_iter()
        .map(|k| {
            let xi = k as f64 * dxi;
            Ok((xi, spec.eval(xi)?))
        })
        .collect::<Result<_>>()?;
    let max_abs = bins.iter().fold(0.0f64, |m, (_, a)| m.max(a.abs()));
    if max_abs == 0.0 {
        return Err(Error::Degenerate("spectrum vanishes on every bin".into()));
    }
    let mut null = vec![false; bins.len()];
    for (i, (_, a)) in bins.iter().enumerate() {
        if a.abs() <= cfg.null_threshold * max_abs {
            null[i] = true;
        }
    }
    for i in 0..bins.len().saturating_sub(1) {
        let (a0, a1) = (bins[i].1, bins[i + 1].1);
        if a0 != 0.0 && a1 != 0.0 && a0.signum() != a1.signum() {
            let j = if a0.abs() <= a1.abs() { i } else { i + 1 };
            null[j] = true;
        }
    }
    if null.iter().all(|x| *x) {
        return Err(Error::Degenerate("every frequency bin is a null mode".into()));
    }

    let eps = s.epsilon();
    let inverse: Vec<f64> = bins
        .par_iter()
        .zip(null.par_iter())
        .map(|(&(xi, a), &is_null)| {
            if is_null {
                return Ok(0.0);
            }
            // 1/iα̂ = 1/(2πξ) + β̂/(2π) where the deficit is small
            if 2.0 * PI * eps * xi < 1.0 {
                let d = spectral::deficit(s, xi)?;
                Ok(1.0 / (2.0 * PI * xi) + d / (2.0 * PI * xi * a))
            } else {
                Ok(1.0 / a)
            }
        })
        .collect::<Result<_>>()?;

    let mean = f.mean();
    let mut buf: Vec<Complex64> = f.values().iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex64::new(0.0, 0.0);
    buf[half] = Complex64::new(0.0, 0.0);
    for (i, inv) in inverse.iter().enumerate() {
        let k = i + 1;
        // û = F̂ / (i · iα̂) = -i F̂ / iα̂; conjugate multiplier on negative bins
        buf[k] *= Complex64::new(0.0, -inv);
        buf[n - k] *= Complex64::new(0.0, *inv);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale_n = 1.0 / n as f64;
    let mut values: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(j, z)| z.re * scale_n + mean * f.t(j))
        .collect();
    let shift = match cfg.constant_policy {
        ConstantPolicy::ZeroMean => 0.0,
        ConstantPolicy::FixedValue(c) => c,
    };
    let m = values.iter().sum::<f64>() / n as f64;
    for v in &mut values {
        *v += shift - m;
    }
    let particular = GridFunction::new(-t, t, values)?;

    let mut null_modes = vec![NullMode { xi: 0.0, k: 0 }];
    for (i, is_null) in null.iter().enumerate() {
        if *is_null {
            let xi = bins[i].0;
            null_modes.push(NullMode { xi, k: 0 });
            null_modes.push(NullMode { xi: -xi, k: 0 });
        }
    }
    null_modes.sort_by(|a, b| a.xi.partial_cmp(&b.xi).unwrap().then(a.k.cmp(&b.k)));

    let residual = residual(s, &particular, f, cfg)?;
    if residual.is_nan() {
        warnings.push("kernel window too wide for an interior residual".into());
    }
    Ok(AntiderivativeResult {
        particular,
        null_modes,
        residual,
        mean_slope: mean,
        warnings,
    })
}

/// `sup|D u - F|` on up to `residual_samples` grid nodes inside the central
/// 80% of the domain whose kernel window stays inside the data.
fn residual(s: &ScaledKernel, u: &GridFunction, f: &GridFunction, cfg: &SolverConfig) -> Result<f64> {
    let q = QuadratureConfig::with_tolerance(1e-11);
    let r = s.radius(&q)?;
    let (lo, hi) = u.data_domain();
    let inner = 0.8 * cfg.half_width;
    let idx: Vec<usize> = (0..u.len())
        .filter(|&i| {
            let t = u.t(i);
            t.abs() <= inner && t - r >= lo && t + r <= hi
        })
        .collect();
    if idx.is_empty() {
        return Ok(f64::NAN);
    }
    let stride = idx.len().div_ceil(cfg.residual_samples.max(1)).max(1);
    let picked: Vec<usize> = idx.into_iter().step_by(stride).collect();
    let pts: Vec<f64> = picked.iter().map(|&i| u.t(i)).collect();
    let du = apply(s, u, &pts, &q)?;
    Ok(picked
        .iter()
        .zip(&du)
        .fold(0.0f64, |m, (&i, d)| m.max((d - f.values()[i]).abs())))
}

/// Homogeneous modes `(ξ̄_j/ε, k)` with `|ξ̄_j/ε| < window`, `k` below the
/// multiplicity of the zero.
pub fn homogeneous_basis(k: &KernelProfile, epsilon: f64, window: f64) -> Result<Vec<NullMode>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let zeros = spectral::find_zeros(k, window * epsilon, 64)?;
    let mut modes = Vec::new();
    for z in &zeros.zeros {
        let xi = z.xi / epsilon;
        if xi >= window {
            continue;
        }
        for kk in 0..z.multiplicity {
            modes.push(NullMode { xi, k: kk });
            if xi > 0.0 {
                modes.push(NullMode { xi: -xi, k: kk });
            }
        }
    }
    modes.sort_by(|a, b| a.xi.partial_cmp(&b.xi).unwrap().then(a.k.cmp(&b.k)));
    Ok(modes)
}

/// Real part of `Σ A_{j,k} t^k e^{2πiξ_j t}` for user-supplied complex
/// coefficients `(re, im)`.
pub fn homogeneous_solution(terms: &[(NullMode, f64, f64)], t: f64) -> f64 {
    terms
        .iter()
        .map(|(m, re, im)| {
            let phase = 2.0 * PI * m.xi * t;
            t.powi(m.k as i32) * (re * phase.cos() - im * phase.sin())
        })
        .sum()
}

/// Named closed-form antiderivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Exponential kernel with `F(t) = 1/(1+t²)`.
    ExpArctan,
}

impl FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exp-arctan" => Ok(Reference::ExpArctan),
            other => Err(Error::InvalidParameter(format!("unknown reference `{other}`"))),
        }
    }
}

/// `arctan t + 2ε² t/(1+t²)²` for [`Reference::ExpArctan`].
pub fn closed_form_reference(name: Reference, epsilon: f64, t: f64) -> f64 {
    match name {
        Reference::ExpArctan => {
            let d = 1.0 + t * t;
            t.atan() + 2.0 * epsilon * epsilon * t / (d * d)
        }
    }
}

/// For the exponential kernel, `v_ε = ∫F - ε² F'` for any smooth `F`; takes
/// the values of `∫F` and `F'` at the point of interest.
pub fn exponential_kernel_antiderivative(integral_f: f64, f_prime: f64, epsilon: f64) -> f64 {
    integral_f - epsilon * epsilon * f_prime
}

/// Order `1 + k_α` of the solve relative to `F` at high frequency:
/// `v̂_ε ~ F̂ |ξ|^{1+k_α}`. Positive roughens, negative smooths.
pub fn smoothness_shift(k: &KernelProfile) -> Result<f64> {
    let f = k
        .flatness()
        .ok_or_else(|| Error::Precondition(format!("kernel `{}` has no flatness record", k.name())))?;
    Ok(1.0 + f.k_alpha)
}

/// Convenience: scale `k` and solve.
pub fn solve_with(
    k: &KernelProfile,
    epsilon: f64,
    f: &GridFunction,
    cfg: &SolverConfig,
) -> Result<AntiderivativeResult> {
    solve(&scale(k, epsilon)?, f, cfg)
}
