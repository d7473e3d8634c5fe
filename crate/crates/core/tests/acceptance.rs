//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails. Tolerances and runtime limits are fixed here.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nlcalc::antiderivative::{closed_form_reference, homogeneous_basis, solve, Reference, SolverConfig};
use nlcalc::convergence_lab::{
    antiderivative_sweep, derivative_sweep, dyadic, gradcon_distances, zero_scaling_sweep,
    AntiderivativeSweep, Region,
};
use nlcalc::derivative::{annihilation_residual, apply, weak_pairing, Callable, GridFunction, QuadratureConfig};
use nlcalc::kernels::{scale, KernelProfile};
use nlcalc::spectral::{far_field_certificate, far_field_threshold, find_zeros, near_field_certificate};
use nlcalc::testfns::bumps;
use nlcalc::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let (pass, detail) = match result {
        Ok(o) => (o.pass && in_time, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "[{}] criterion {id:>2} {name}: {detail}; time {:.2}s (limit {}s){}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { " OVER TIME" }
    );
    pass
}

fn closed_form_antiderivative() -> Result<Outcome> {
    let eps = 0.1;
    let s = scale(&KernelProfile::exponential(), eps)?;
    let cfg = SolverConfig::new(40.0, 1 << 14);
    let f = cfg.sample(|t| 1.0 / (1.0 + t * t))?;
    let r = solve(&s, &f, &cfg)?;
    let diff: Vec<f64> = (0..f.len())
        .filter(|&i| f.t(i).abs() <= 10.0)
        .map(|i| r.particular.values()[i] - closed_form_reference(Reference::ExpArctan, eps, f.t(i)))
        .collect();
    let hi = diff.iter().copied().fold(f64::MIN, f64::max);
    let lo = diff.iter().copied().fold(f64::MAX, f64::min);
    // deviation from the best constant, relative to the reference sup norm
    let reference_sup = (0..f.len())
        .filter(|&i| f.t(i).abs() <= 10.0)
        .map(|i| closed_form_reference(Reference::ExpArctan, eps, f.t(i)).abs())
        .fold(0.0f64, f64::max);
    let rel = 0.5 * (hi - lo) / reference_sup;
    Ok(Outcome {
        pass: rel <= 1e-4,
        detail: format!("relative deviation from constant {rel:.3e} (tol 1e-4)"),
    })
}

fn sine_annihilation() -> Result<Outcome> {
    let s = scale(&KernelProfile::sine(), 0.25)?;
    let q = QuadratureConfig::default();
    let mut worst_null = 0.0f64;
    for n in [0, 2, -2, 3, -3, 4, -4] {
        worst_null = worst_null.max(annihilation_residual(&s, n, &q)?);
    }
    let live = annihilation_residual(&s, 1, &q)?.min(annihilation_residual(&s, -1, &q)?);
    Ok(Outcome {
        pass: worst_null <= 1e-8 && live > 1e-2,
        detail: format!("max residual n in {{0,±2,±3,±4}} {worst_null:.3e} (tol 1e-8), n=±1 {live:.3e} (> 1e-2)"),
    })
}

fn zero_scaling() -> Result<Outcome> {
    let k = KernelProfile::sine();
    let base = find_zeros(&k, 2.5, 64)?;
    let expected = [1.0, 1.5, 2.0];
    let found: Vec<f64> = base.nonzero().take(3).map(|z| z.xi).collect();
    let base_err = found
        .iter()
        .zip(expected)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let report = zero_scaling_sweep(&k, &[1.0, 0.5, 0.25, 0.125], 2.5, 3)?;
    let mut worst = 0.0f64;
    let mut complete = found.len() == 3;
    for m in &report.errors {
        complete &= m.get("zeros_found").copied() == Some(3.0);
        for j in ["j1", "j2", "j3"] {
            worst = worst.max(m.get(j).copied().unwrap_or(f64::INFINITY));
        }
    }
    Ok(Outcome {
        pass: complete && worst <= 1e-9 && base_err <= 1e-9,
        detail: format!("max |eps xi_j,eps - xi_j| {worst:.3e}, max |xi_j - (1, 3/2, 2)| {base_err:.3e} (tol 1e-9)"),
    })
}

fn taylor_bound() -> Result<Outcome> {
    let u = Callable::new(|t: f64| (-t * t).exp());
    let up = |t: f64| -2.0 * t * (-t * t).exp();
    let r = derivative_sweep(
        &KernelProfile::indicator(),
        &u,
        &up,
        Some(2.0),
        &dyadic(0..=8),
        &Region::interval(-4.0, 4.0, 801),
        &QuadratureConfig::default(),
    )?;
    let order = r.fitted_order.unwrap_or(f64::NAN);
    Ok(Outcome {
        pass: r.bounds_hold() && order >= 1.8,
        detail: format!(
            "bound holds at {}/{} eps, fitted order {order:.3} (>= 1.8)",
            r.bound_checks.iter().filter(|b| **b).count(),
            r.epsilons.len()
        ),
    })
}

fn near_field() -> Result<Outcome> {
    let xis: Vec<f64> = (0..401).map(|i| -10.0 + 20.0 * i as f64 / 400.0).collect();
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for eps in [1.0, 0.1] {
        let c = near_field_certificate(&scale(&KernelProfile::exponential(), eps)?, &xis)?;
        ok &= c.ok && (c.c_alpha - 8.0 * PI.powi(3)).abs() <= 1e-10 * 8.0 * PI.powi(3);
        for b in &c.checks {
            let up = b.upper.unwrap_or(f64::INFINITY);
            worst = worst.min((b.value - b.lower).min(up - b.value));
        }
    }
    Ok(Outcome {
        pass: ok,
        detail: format!("802 samples inside the sandwich, C_alpha = 8 pi^3, smallest gap {worst:.3e}"),
    })
}

fn far_field() -> Result<Outcome> {
    let s = scale(&KernelProfile::power(-1.5)?, 0.1)?;
    let start = far_field_threshold(&s)?;
    let xis: Vec<f64> = (0..100).map(|i| start * 1000f64.powf(i as f64 / 99.0)).collect();
    let c = far_field_certificate(&s, &xis)?;
    let passing = c.checks.iter().filter(|b| b.ok).count();
    let ratio = c
        .checks
        .iter()
        .map(|b| b.value / b.lower)
        .fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        pass: c.ok && passing == 100,
        detail: format!(
            "{passing}/100 samples on [{start}, {:.0}] above C'_alpha = {:.6}, min value/bound {ratio:.4}",
            start * 1000.0,
            c.c_prime_alpha.unwrap_or(f64::NAN)
        ),
    })
}

fn strong_lp() -> Result<Outcome> {
    let k = KernelProfile::power(-1.5)?;
    let cfg = AntiderivativeSweep {
        solver: SolverConfig::new(16.0, 1 << 12),
        compare_half_width: 8.0,
        p_norms: vec![2.0],
    };
    let v = |t: f64| 0.5 * PI.sqrt() * libm::erf(t);
    let r = antiderivative_sweep(&k, &|t: f64| (-t * t).exp(), &v, &dyadic(1..=6), &cfg, &[])?;
    let e = r.series("L2");
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    let ratio = e[e.len() - 1] / e[0];
    Ok(Outcome {
        pass: decreasing && ratio <= 0.05,
        detail: format!(
            "L2 errors {} strictly decreasing: {decreasing}, final/initial {ratio:.3e} (<= 0.05)",
            e.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ")
        ),
    })
}

fn weak_pairing_decay() -> Result<Outcome> {
    let k = KernelProfile::sine();
    let grid = GridFunction::from_fn(-4.0, 4.0, 1 << 13, |_| 0.0)?;
    let pairing = |eps: f64, psi: &GridFunction| -> Result<f64> {
        let xi = homogeneous_basis(&k, eps, 1.25 / eps)?
            .into_iter()
            .map(|m| m.xi)
            .find(|x| *x > 0.0)
            .expect("sine kernel has a positive zero");
        let c = grid.map(|t, _| (2.0 * PI * xi * t).cos());
        let s = grid.map(|t, _| (2.0 * PI * xi * t).sin());
        Ok(weak_pairing(&c, psi)?.hypot(weak_pairing(&s, psi)?))
    };
    let mut worst = 0.0f64;
    let mut smallest_start = f64::INFINITY;
    for b in bumps() {
        let psi = grid.map(|t, _| b.eval(t));
        let start = pairing(1.0, &psi)?;
        let end = pairing(1.0 / 16.0, &psi)?;
        smallest_start = smallest_start.min(start);
        worst = worst.max(end / start);
    }
    Ok(Outcome {
        pass: worst <= 0.1 && smallest_start > 1e-3,
        detail: format!("max ratio eps=1/16 vs eps=1 over 3 bumps {worst:.3e} (<= 0.1), smallest eps=1 pairing {smallest_start:.3e}"),
    })
}

fn figure_one() -> Result<Outcome> {
    let d = gradcon_distances(
        &[1.0, 0.5, 0.25],
        &Region::symmetric(0.5, 3.0, 251),
        &QuadratureConfig::default(),
    )?;
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    Ok(Outcome {
        pass: decreasing,
        detail: format!(
            "sup distances on 1/2 <= |t| <= 3: {} strictly decreasing: {decreasing}",
            d.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ")
        ),
    })
}

fn operator_algebra() -> Result<Outcome> {
    let q = QuadratureConfig::default();
    let kernels = [
        KernelProfile::indicator(),
        KernelProfile::exponential(),
        KernelProfile::sine(),
        KernelProfile::power(-1.5)?,
        KernelProfile::power(0.5)?,
        KernelProfile::flat(),
    ];
    let pts: Vec<f64> = (0..21).map(|i| -2.0 + 0.2 * i as f64).collect();
    let mut constant = 0.0f64;
    let mut identity = 0.0f64;
    for k in &kernels {
        for eps in [1.0, 0.3, 0.05] {
            let s = scale(k, eps)?;
            for v in apply(&s, &Callable::new(|_| 7.25), &pts, &q)? {
                constant = constant.max(v.abs());
            }
            for v in apply(&s, &Callable::new(|t| t), &pts, &q)? {
                identity = identity.max((v - 1.0).abs());
            }
        }
    }

    let grid = GridFunction::from_fn(-4.0, 4.0, 1 << 11, |_| 0.0)?;
    let bs = bumps();
    let mut skew = 0.0f64;
    let mut linear = 0.0f64;
    for k in [KernelProfile::indicator(), KernelProfile::exponential()] {
        let s = scale(&k, 0.5)?;
        let on_grid = |f: &(dyn Fn(f64) -> f64 + Sync)| -> Result<GridFunction> {
            grid.with_values(apply(&s, &Callable::new(f), &grid.points(), &q)?)
        };
        let (p0, p1) = (bs[0].clone(), bs[2].clone());
        let d0 = on_grid(&|t| p0.eval(t))?;
        let d1 = on_grid(&|t| p1.eval(t))?;
        let g0 = grid.map(|t, _| p0.eval(t));
        let g1 = grid.map(|t, _| p1.eval(t));
        skew = skew.max((weak_pairing(&d0, &g1)? + weak_pairing(&g0, &d1)?).abs());
        let combo = on_grid(&|t| 2.5 * p0.eval(t) - 0.75 * p1.eval(t))?;
        for i in 0..grid.len() {
            let lin = 2.5 * d0.values()[i] - 0.75 * d1.values()[i];
            linear = linear.max((combo.values()[i] - lin).abs());
        }
    }
    Ok(Outcome {
        pass: constant <= 1e-10 && identity <= 1e-10 && skew <= 1e-8 && linear <= 1e-10,
        detail: format!(
            "constant {constant:.2e} (1e-10), identity {identity:.2e} (1e-10), skew {skew:.2e} (1e-8), linearity {linear:.2e} (1e-10)"
        ),
    })
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let results = [
        run(1, "closed-form antiderivative", s(5), closed_form_antiderivative),
        run(2, "sine-kernel annihilation", s(10), sine_annihilation),
        run(3, "zero scaling", s(5), zero_scaling),
        run(4, "Taylor bound and order", s(30), taylor_bound),
        run(5, "near-field sandwich", s(1), near_field),
        run(6, "far-field bound", s(10), far_field),
        run(7, "strong L2 convergence", s(60), strong_lp),
        run(8, "weak pairing decay", s(5), weak_pairing_decay),
        run(9, "|t|^(1/2) curves approach", s(10), figure_one),
        run(10, "operator algebra", s(5), operator_algebra),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
