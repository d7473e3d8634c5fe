//! ε-sweeps that measure how the nonlocal operators approach classical
//! calculus as the horizon shrinks.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antiderivative::{solve, SolverConfig};
use crate::derivative::{apply, taylor_bound, weak_pairing, Callable, GridFunction, QuadratureConfig, Sampled};
use crate::error::{Error, Result};
use crate::io::Curves;
use crate::kernels::{scale, KernelProfile};
use crate::spectral::{find_scaled_zeros, find_zeros, ZeroSearch};
use crate::testfns::{Bump, Builtin};

/// Status of [`SweepReport::fitted_order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderStatus {
    Fitted,
    /// Fewer than four points, or errors at the quadrature floor.
    FloorLimited,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kernel: String,
    pub experiment: String,
    pub epsilons: Vec<f64>,
    /// Per ε, norm name to value.
    pub errors: Vec<BTreeMap<String, f64>>,
    /// Norm used for `fitted_order`.
    pub primary_norm: String,
    pub fitted_order: Option<f64>,
    pub order_status: OrderStatus,
    /// Name of the bound checked per ε, if one applies.
    pub bound: Option<String>,
    pub bound_checks: Vec<bool>,
}

impl SweepReport {
    pub fn series(&self, norm: &str) -> Vec<f64> {
        self.errors
            .iter()
            .map(|m| m.get(norm).copied().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn bounds_hold(&self) -> bool {
        self.bound_checks.iter().all(|b| *b)
    }
}

/// Sample points on a union of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub intervals: Vec<(f64, f64)>,
    /// Points per interval, endpoints included.
    pub samples: usize,
}

impl Region {
    pub fn new(intervals: Vec<(f64, f64)>, samples: usize) -> Self {
        Self { intervals, samples }
    }

    pub fn interval(a: f64, b: f64, samples: usize) -> Self {
        Self::new(vec![(a, b)], samples)
    }

    /// `a ≤ |t| ≤ b`.
    pub fn symmetric(a: f64, b: f64, samples: usize) -> Self {
        Self::new(vec![(-b, -a), (a, b)], samples)
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        self.intervals
            .iter()
            .flat_map(|&(a, b)| (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64))
            .collect()
    }

    /// Trapezoid weights matching [`Region::points`].
    pub fn weights(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        self.intervals
            .iter()
            .flat_map(|&(a, b)| {
                let h = (b - a) / (n - 1) as f64;
                (0..n).map(move |i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            })
            .collect()
    }
}

/// Least-squares slope of `log err` against `log ε`.
pub fn fit_order(epsilons: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = epsilons
        .iter()
        .zip(errors)
        .filter(|(e, r)| **e > 0.0 && **r > 0.0 && r.is_finite())
        .map(|(e, r)| (e.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `ε = 2^{-k}` for `k` in `ks`.
pub fn dyadic(ks: impl IntoIterator<Item = i32>) -> Vec<f64> {
    ks.into_iter().map(|k| 2f64.powi(-k)).collect()
}

fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon list".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("epsilons must be positive".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("epsilons must be strictly decreasing".into()));
    }
    Ok(())
}

fn order(epsilons: &[f64], series: &[f64], floor: f64) -> (Option<f64>, OrderStatus) {
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    if series.len() < 4 || !(min > 100.0 * floor) {
        return (None, OrderStatus::FloorLimited);
    }
    match fit_order(epsilons, series) {
        Some(p) => (Some(p), OrderStatus::Fitted),
        None => (None, OrderStatus::FloorLimited),
    }
}

/// `D_{α,ε}u` against `u'` on `region` for each ε: sup and L² errors, and the
/// Taylor bound when `sup_u2 = sup|u''|` is given.
pub fn derivative_sweep<U, P>(
    k: &KernelProfile,
    u: &U,
    u_prime: &P,
    sup_u2: Option<f64>,
    epsilons: &[f64],
    region: &Region,
    q: &QuadratureConfig,
) -> Result<SweepReport>
where
    U: Sampled + ?Sized,
    P: Fn(f64) -> f64 + Sync + ?Sized,
{
    check_epsilons(epsilons)?;
    let pts = region.points();
    let w = region.weights();
    let rows: Vec<(BTreeMap<String, f64>, Option<bool>)> = epsilons
        .par_iter()
        .map(|&eps| {
            let s = scale(k, eps)?;
            let du = apply(&s, u, &pts, q)?;
            let diff: Vec<f64> = du.iter().zip(&pts).map(|(d, t)| d - u_prime(*t)).collect();
            let sup = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let l2 = diff.iter().zip(&w).map(|(d, w)| w * d * d).sum::<f64>().sqrt();
            let mut m = BTreeMap::new();
            m.insert("sup".to_string(), sup);
            m.insert("L2".to_string(), l2);
            let check = match sup_u2 {
                Some(b) => {
                    let bound = taylor_bound(&s, b)?;
                    m.insert("taylor_bound".to_string(), bound);
                    Some(sup <= bound * (1.0 + 1e-9) + 10.0 * q.tolerance)
                }
                None => None,
            };
            Ok((m, check))
        })
        .collect::<Result<_>>()?;
    let sup: Vec<f64> = rows.iter().map(|r| r.0["sup"]).collect();
    let (fitted_order, order_status) = order(epsilons, &sup, q.tolerance);
    Ok(SweepReport {
        kernel: k.name().to_string(),
        experiment: "derivative".into(),
        epsilons: epsilons.to_vec(),
        bound: sup_u2.map(|_| "taylor".to_string()),
        bound_checks: rows.iter().filter_map(|r| r.1).collect(),
        errors: rows.into_iter().map(|r| r.0).collect(),
        primary_norm: "sup".into(),
        fitted_order,
        order_status,
    })
}

/// Settings for [`antiderivative_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntiderivativeSweep {
    pub solver: SolverConfig,
    /// Errors are measured on `|t| ≤ compare_half_width`.
    pub compare_half_width: f64,
    /// `p` values; `f64::INFINITY` for the sup norm.
    pub p_norms: Vec<f64>,
}

fn norm_name(p: f64) -> String {
    if p.is_infinite() {
        "Linf".into()
    } else {
        format!("L{p}")
    }
}

/// Solves `D_{α,ε}v_ε = F` for each ε and compares with `v_ref` after
/// removing the mean difference: strong `L^p` errors and weak errors
/// `|(v_ε - v, ψ)|` for each test function.
pub fn antiderivative_sweep<F, V>(
    k: &KernelProfile,
    f: &F,
    v_ref: &V,
    epsilons: &[f64],
    cfg: &AntiderivativeSweep,
    test_functions: &[Bump],
) -> Result<SweepReport>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
    V: Fn(f64) -> f64 + Sync + ?Sized,
{
    check_epsilons(epsilons)?;
    if cfg.p_norms.is_empty() || cfg.p_norms.iter().any(|p| !(*p >= 1.0)) {
        return Err(Error::InvalidParameter("p norms must be >= 1".into()));
    }
    let rhs = cfg.solver.sample(f)?;
    let rows: Vec<BTreeMap<String, f64>> = epsilons
        .par_iter()
        .map(|&eps| {
            let s = scale(k, eps)?;
            let r = solve(&s, &rhs, &cfg.solver)?;
            let u = &r.particular;
            let idx: Vec<usize> = (0..u.len())
                .filter(|&i| u.t(i).abs() <= cfg.compare_half_width)
                .collect();
            if idx.is_empty() {
                return Err(Error::InvalidParameter("comparison window holds no grid points".into()));
            }
            let raw: Vec<f64> = idx.iter().map(|&i| u.values()[i] - v_ref(u.t(i))).collect();
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            let diff: Vec<f64> = raw.iter().map(|d| d - mean).collect();
            let h = u.spacing();
            let mut m = BTreeMap::new();
            for &p in &cfg.p_norms {
                let v = if p.is_infinite() {
                    diff.iter().fold(0.0f64, |m, d| m.max(d.abs()))
                } else {
                    (h * diff.iter().map(|d| d.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
                };
                m.insert(norm_name(p), v);
            }
            if !test_functions.is_empty() {
                let full: Vec<f64> = (0..u.len())
                    .map(|i| {
                        if u.t(i).abs() <= cfg.compare_half_width {
                            u.values()[i] - v_ref(u.t(i)) - mean
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let d = u.with_values(full)?;
                for psi in test_functions {
                    let g = u.map(|t, _| psi.eval(t));
                    m.insert(format!("weak:{}", psi.name), weak_pairing(&d, &g)?.abs());
                }
            }
            m.insert("residual".to_string(), r.residual);
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let primary = norm_name(cfg.p_norms[0]);
    let series: Vec<f64> = rows.iter().map(|m| m[&primary]).collect();
    let (fitted_order, order_status) = order(epsilons, &series, 1e-12);
    Ok(SweepReport {
        kernel: k.name().to_string(),
        experiment: "antiderivative".into(),
        epsilons: epsilons.to_vec(),
        errors: rows,
        primary_norm: primary,
        fitted_order,
        order_status,
        bound: None,
        bound_checks: Vec::new(),
    })
}

/// For each ε, the first `count` positive zeros of the scaled spectrum,
/// located independently, against `ξ̄_j / ε` from the unscaled spectrum:
/// errors `j<n>` hold `|ε ξ_{j,ε} - ξ̄_j|`.
pub fn zero_scaling_sweep(k: &KernelProfile, epsilons: &[f64], window: f64, count: usize) -> Result<SweepReport> {
    check_epsilons(epsilons)?;
    let base = find_zeros(k, window, ZeroSearch::default().resolution)?;
    let reference: Vec<f64> = base.nonzero().take(count).map(|z| z.xi).collect();
    let rows: Vec<BTreeMap<String, f64>> = epsilons
        .par_iter()
        .map(|&eps| {
            let s = scale(k, eps)?;
            let zs = find_scaled_zeros(&s, window / eps, &ZeroSearch::default())?;
            let found: Vec<f64> = zs.nonzero().take(count).map(|z| z.xi).collect();
            let mut m = BTreeMap::new();
            m.insert("zeros_found".to_string(), found.len() as f64);
            for (j, (x, r)) in found.iter().zip(&reference).enumerate() {
                m.insert(format!("j{}", j + 1), (eps * x - r).abs());
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        kernel: k.name().to_string(),
        experiment: "zero-scaling".into(),
        epsilons: epsilons.to_vec(),
        errors: rows,
        primary_norm: "j1".into(),
        fitted_order: None,
        order_status: OrderStatus::NotApplicable,
        bound: None,
        bound_checks: Vec::new(),
    })
}

/// `D_{α,ε}u` for `u = |t|^{1/2}` and the indicator kernel on `ts`, one
/// column per ε, plus the classical derivative (`NaN` at `t = 0`).
pub fn figure_gradcon(epsilons: &[f64], ts: &[f64], q: &QuadratureConfig) -> Result<Curves> {
    check_epsilons(epsilons)?;
    let k = KernelProfile::indicator();
    let u = Callable::new(|t: f64| Builtin::SqrtAbs.eval(t)).with_kinks(Builtin::SqrtAbs.kinks());
    let cols: Vec<Vec<f64>> = epsilons
        .par_iter()
        .map(|&eps| apply(&scale(&k, eps)?, &u, ts, q))
        .collect::<Result<_>>()?;
    let mut curves = Curves::new("t", ts.to_vec());
    for (eps, c) in epsilons.iter().zip(cols) {
        curves.push(format!("eps={eps}"), c)?;
    }
    curves.push("classical", ts.iter().map(|t| Builtin::SqrtAbs.derivative(*t)).collect())?;
    Ok(curves)
}

/// Sup distance of each ε column of [`figure_gradcon`] to the classical
/// derivative on `region`.
pub fn gradcon_distances(epsilons: &[f64], region: &Region, q: &QuadratureConfig) -> Result<Vec<f64>> {
    let ts = region.points();
    let c = figure_gradcon(epsilons, &ts, q)?;
    let classical = c.column("classical").expect("classical column");
    Ok(c.columns
        .iter()
        .filter(|(n, _)| n != "classical")
        .map(|(_, v)| {
            v.iter()
                .zip(classical)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .collect())
}

/// Grid samples of `f` on the grid of `like`.
pub fn sample_like<F: Fn(f64) -> f64>(like: &GridFunction, f: F) -> GridFunction {
    like.map(|t, _| f(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn slope_of_exact_power_law() {
        let e = dyadic(0..6);
        let r: Vec<f64> = e.iter().map(|x| 3.0 * x * x).collect();
        assert_relative_eq!(fit_order(&e, &r).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn epsilons_must_decrease() {
        assert!(check_epsilons(&[0.5, 0.5]).is_err());
        assert!(check_epsilons(&[0.25, 0.5]).is_err());
        assert!(check_epsilons(&[]).is_err());
        assert!(check_epsilons(&[1.0, 0.5]).is_ok());
    }

    #[test]
    fn few_points_are_floor_limited() {
        let (o, s) = order(&[1.0, 0.5, 0.25], &[1.0, 0.25, 0.0625], 1e-12);
        assert!(o.is_none());
        assert_eq!(s, OrderStatus::FloorLimited);
    }

    #[test]
    fn affine_input_is_exact() {
        let u = Callable::new(|t: f64| 2.0 * t - 1.0);
        let r = derivative_sweep(
            &KernelProfile::indicator(),
            &u,
            &|_| 2.0,
            Some(0.0),
            &dyadic(0..5),
            &Region::interval(-1.0, 1.0, 11),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!(r.series("sup").iter().all(|e| *e < 1e-11));
        assert_eq!(r.order_status, OrderStatus::FloorLimited);
        assert!(r.bounds_hold());
    }

    #[test]
    fn region_weights_integrate_constants() {
        let r = Region::symmetric(0.5, 3.0, 21);
        assert_relative_eq!(r.weights().iter().sum::<f64>(), 5.0, epsilon = 1e-12);
        assert_eq!(r.points().len(), 42);
    }
}
