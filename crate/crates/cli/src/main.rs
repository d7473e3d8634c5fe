#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use nlcalc::antiderivative::{solve, ConstantPolicy, SolverConfig};
use nlcalc::convergence_lab::{
    antiderivative_sweep, derivative_sweep, dyadic, figure_gradcon, zero_scaling_sweep, AntiderivativeSweep,
    Region, SweepReport,
};
use nlcalc::derivative::{annihilation_residual, apply, Callable, GridFunction, QuadratureConfig};
use nlcalc::io::{grid_to_csv, read_grid, read_kernel_table, Curves};
use nlcalc::kernels::{builtin_kernel, check_admissibility, scale, CheckConfig, KernelName, KernelProfile, Requirement};
use nlcalc::spectral::{find_scaled_zeros, find_zeros, ZeroSearch};
use nlcalc::testfns::{bumps, Builtin};

use config::{parse_domain, RunConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or parameters.
    Usage(String),
    Numerical(nlcalc::Error),
    Io(String),
    /// A requested admissibility check failed.
    CheckFailed,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Numerical(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::CheckFailed => write!(f, "kernel failed a required check"),
        }
    }
}

impl From<nlcalc::Error> for CliError {
    fn from(e: nlcalc::Error) -> Self {
        use nlcalc::Error as E;
        match e {
            E::UnknownKernel(_) | E::InvalidParameter(_) | E::Parse(_) => CliError::Usage(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::CheckFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "nlcalc", version, about = "Nonlocal derivatives and antiderivatives")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// indicator, exponential, sine, power, flat, or tabulated (with --table).
    #[arg(long, global = true)]
    kernel: Option<String>,
    #[arg(long = "k-alpha", global = true, allow_hyphen_values = true)]
    k_alpha: Option<f64>,
    /// `s,alpha` CSV of a tabulated kernel profile.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    #[arg(long = "table-support", global = true)]
    table_support: Option<f64>,
    /// Repeatable.
    #[arg(long, global = true)]
    epsilon: Vec<f64>,
    /// `a,b`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_domain)]
    domain: Option<[f64; 2]>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Relative null-mode threshold of the solver.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// zero-mean or fixed-value:<c>.
    #[arg(long = "constant-policy", global = true)]
    constant_policy: Option<String>,
    #[arg(long = "boundary-tol", global = true)]
    boundary_tol: Option<f64>,
    /// Fail instead of warning when the input does not decay at the boundary.
    #[arg(long, global = true)]
    strict: bool,
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Grid CSV input.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Builtin input: zero, linear, gaussian, runge, sqrt-abs.
    #[arg(long, global = true)]
    function: Option<String>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// JSON sidecar path; defaults to the output path with a .json extension.
    #[arg(long, global = true)]
    sidecar: Option<PathBuf>,
    #[arg(long, global = true)]
    experiment: Option<String>,
    /// antisymmetry, dipole, analytic, positivity, flatness. Repeatable.
    #[arg(long, global = true)]
    require: Vec<String>,
    #[arg(long, global = true)]
    window: Option<f64>,
    /// Residual of the sine-kernel mode exp(nπit/ε).
    #[arg(long, global = true, allow_hyphen_values = true)]
    annihilation: Option<i64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Admissibility report for a kernel.
    CheckKernel,
    /// Apply the nonlocal derivative.
    Derive,
    /// Solve for a nonlocal antiderivative.
    Antiderive,
    /// Zeros of the kernel spectrum.
    Zeros,
    /// Run a convergence experiment.
    Sweep,
    /// Curves of the nonlocal derivative of |t|^(1/2).
    Figure,
}

impl Cli {
    fn flags(&self) -> RunConfig {
        RunConfig {
            kernel: self.kernel.clone(),
            k_alpha: self.k_alpha,
            table: self.table.clone(),
            table_support: self.table_support,
            epsilon: self.epsilon.clone(),
            domain: self.domain,
            n: self.n,
            tau: self.tau,
            constant_policy: self.constant_policy.clone(),
            boundary_tol: self.boundary_tol,
            strict: self.strict,
            tolerance: self.tolerance,
            input: self.input.clone(),
            function: self.function.clone(),
            output: self.output.clone(),
            sidecar: self.sidecar.clone(),
            experiment: self.experiment.clone(),
            require: self.require.clone(),
            window: self.window,
            annihilation: self.annihilation,
        }
    }
}

fn kernel(cfg: &RunConfig, default: &str) -> Result<KernelProfile> {
    let name = cfg.kernel.as_deref().unwrap_or(default);
    if name == "tabulated" {
        let path = cfg
            .table
            .as_ref()
            .ok_or_else(|| CliError::Usage("tabulated kernel needs --table".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let (s, a) = read_kernel_table(&text)?;
        let support = match cfg.table_support {
            Some(r) => r,
            None => s.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        };
        return Ok(KernelProfile::tabulated("tabulated", s, a, support, None)?);
    }
    let name: KernelName = name.parse()?;
    Ok(builtin_kernel(name, cfg.k_alpha)?)
}

fn quadrature(cfg: &RunConfig) -> Result<QuadratureConfig> {
    let q = match cfg.tolerance {
        Some(t) => QuadratureConfig::with_tolerance(t),
        None => QuadratureConfig::default(),
    };
    q.validate()?;
    Ok(q)
}

fn builtin(cfg: &RunConfig) -> Result<Option<Builtin>> {
    cfg.function.as_deref().map(|f| f.parse().map_err(CliError::from)).transpose()
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn envelope<T: Serialize>(command: &str, cfg: &RunConfig, body: T) -> serde_json::Value {
    json!({
        "command": command,
        "version": VERSION,
        "config": cfg,
        "result": body,
    })
}

fn check_kernel(cfg: &RunConfig) -> Result<()> {
    let k = kernel(cfg, "exponential")?;
    let report = check_admissibility(&k, &CheckConfig::default());
    let reqs: Vec<Requirement> = if cfg.require.is_empty() {
        vec![Requirement::Antisymmetry, Requirement::Dipole]
    } else {
        cfg.require.iter().map(|r| r.parse()).collect::<nlcalc::Result<_>>()?
    };
    write_output(cfg.output.as_deref(), &to_json(&envelope("check-kernel", cfg, &report)))?;
    if reqs.iter().all(|r| report.passes(*r)) {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

fn epsilons(cfg: &RunConfig, default: &[f64]) -> Result<Vec<f64>> {
    let e = if cfg.epsilon.is_empty() { default.to_vec() } else { cfg.epsilon.clone() };
    if e.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(CliError::Usage("epsilon must be positive".into()));
    }
    Ok(e)
}

fn derive(cfg: &RunConfig) -> Result<()> {
    let k = kernel(cfg, "indicator")?;
    let q = quadrature(cfg)?;
    let eps = epsilons(cfg, &[0.1])?;
    if let Some(n) = cfg.annihilation {
        let rows = eps
            .iter()
            .map(|&e| Ok(json!({"epsilon": e, "residual": annihilation_residual(&scale(&k, e)?, n, &q)?})))
            .collect::<Result<Vec<_>>>()?;
        let body = json!({"kernel": k.name(), "n": n, "residuals": rows});
        return write_output(cfg.output.as_deref(), &to_json(&envelope("derive", cfg, body)));
    }
    let (points, columns) = match (&cfg.input, builtin(cfg)?) {
        (Some(path), _) => {
            let u = read_grid(path)?;
            let r = eps
                .iter()
                .map(|&e| Ok(scale(&k, e)?.radius(&q)?))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0f64, f64::max);
            let (lo, hi) = u.data_domain();
            let points: Vec<f64> = match cfg.domain {
                Some([a, b]) => u.points().into_iter().filter(|t| *t >= a && *t <= b).collect(),
                None => u.points().into_iter().filter(|t| t - r >= lo && t + r <= hi).collect(),
            };
            if points.is_empty() {
                return Err(CliError::Usage("no grid point has its kernel window inside the data".into()));
            }
            let cols = eps
                .iter()
                .map(|&e| Ok(apply(&scale(&k, e)?, &u, &points, &q)?))
                .collect::<Result<Vec<_>>>()?;
            (points, cols.into_iter().map(|c| (None, c)).collect::<Vec<_>>())
        }
        (None, Some(b)) => {
            let [a, c] = cfg.domain.unwrap_or([-3.0, 3.0]);
            let n = cfg.n.unwrap_or(601).max(2);
            let points: Vec<f64> = (0..n).map(|i| a + (c - a) * i as f64 / (n - 1) as f64).collect();
            let u = Callable::new(move |t| b.eval(t)).with_kinks(b.kinks());
            let mut cols = eps
                .iter()
                .map(|&e| Ok((None, apply(&scale(&k, e)?, &u, &points, &q)?)))
                .collect::<Result<Vec<_>>>()?;
            cols.push((Some("classical"), points.iter().map(|t| b.derivative(*t)).collect()));
            (points, cols)
        }
        (None, None) => return Err(CliError::Usage("derive needs --input or --function".into())),
    };
    let mut curves = Curves::new("t", points);
    let mut e = eps.iter();
    for (name, col) in columns {
        let name = match name {
            Some(n) => n.to_string(),
            None => format!("eps={}", e.next().expect("one column per epsilon")),
        };
        curves.push(name, col)?;
    }
    write_output(cfg.output.as_deref(), &curves.to_csv())
}

fn antiderive(cfg: &RunConfig) -> Result<()> {
    let k = kernel(cfg, "exponential")?;
    let eps = epsilons(cfg, &[0.1])?;
    if eps.len() != 1 {
        return Err(CliError::Usage("antiderive takes a single --epsilon".into()));
    }
    let f = match (&cfg.input, builtin(cfg)?) {
        (Some(path), _) => read_grid(path)?,
        (None, Some(b)) => {
            let [a, c] = cfg.domain.unwrap_or([-20.0, 20.0]);
            GridFunction::from_fn(a, c, cfg.n.unwrap_or(4096), move |t| b.eval(t))?
        }
        (None, None) => return Err(CliError::Usage("antiderive needs --input or --function".into())),
    };
    let t = f.b();
    if (f.a() + t).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(CliError::Usage(format!(
            "the solver needs a symmetric domain [-T, T), got [{}, {})",
            f.a(),
            f.b()
        )));
    }
    let mut solver = SolverConfig::new(t, f.len());
    if let Some(tau) = cfg.tau {
        solver.null_threshold = tau;
    }
    if let Some(p) = &cfg.constant_policy {
        solver.constant_policy = p.parse::<ConstantPolicy>()?;
    }
    if let Some(b) = cfg.boundary_tol {
        solver.boundary_tolerance = b;
    }
    solver.strict = cfg.strict;
    let s = scale(&k, eps[0])?;
    let r = solve(&s, &f, &solver)?;
    write_output(cfg.output.as_deref(), &grid_to_csv(&r.particular))?;
    let sidecar = json!({
        "command": "antiderive",
        "version": VERSION,
        "kernel": k.name(),
        "epsilon": eps[0],
        "config": cfg,
        "solver": solver,
        "null_modes": r.null_modes,
        "residual": r.residual,
        "mean_slope": r.mean_slope,
        "warnings": r.warnings,
    });
    let path = cfg
        .sidecar
        .clone()
        .or_else(|| cfg.output.as_ref().map(|p| p.with_extension("json")));
    match path {
        Some(p) => write_output(Some(&p), &to_json(&sidecar)),
        None => {
            eprint!("{}", to_json(&sidecar));
            Ok(())
        }
    }
}

fn zeros(cfg: &RunConfig) -> Result<()> {
    let k = kernel(cfg, "sine")?;
    let window = cfg.window.unwrap_or(3.0);
    let body = if cfg.epsilon.is_empty() {
        serde_json::to_value(find_zeros(&k, window, ZeroSearch::default().resolution)?)
    } else {
        let sets = cfg
            .epsilon
            .iter()
            .map(|&e| Ok(find_scaled_zeros(&scale(&k, e)?, window, &ZeroSearch::default())?))
            .collect::<Result<Vec<_>>>()?;
        serde_json::to_value(sets)
    }
    .expect("serializable");
    write_output(cfg.output.as_deref(), &to_json(&envelope("zeros", cfg, body)))
}

fn sweep(cfg: &RunConfig) -> Result<()> {
    let q = quadrature(cfg)?;
    let id = cfg
        .experiment
        .as_deref()
        .ok_or_else(|| CliError::Usage("sweep needs --experiment".into()))?;
    let gaussian = |t: f64| (-t * t).exp();
    let report: SweepReport = match id {
        "derivative-gaussian" | "derivative-affine" | "derivative-sqrt-abs" => {
            let k = kernel(cfg, "indicator")?;
            let eps = epsilons(cfg, &dyadic(0..=6))?;
            match id {
                "derivative-gaussian" => derivative_sweep(
                    &k,
                    &Callable::new(gaussian),
                    &|t: f64| -2.0 * t * gaussian(t),
                    Some(2.0),
                    &eps,
                    &Region::interval(-4.0, 4.0, 801),
                    &q,
                )?,
                "derivative-affine" => derivative_sweep(
                    &k,
                    &Callable::new(|t| 2.0 * t - 1.0),
                    &|_| 2.0,
                    Some(0.0),
                    &eps,
                    &Region::interval(-4.0, 4.0, 801),
                    &q,
                )?,
                _ => derivative_sweep(
                    &k,
                    &Callable::new(|t: f64| t.abs().sqrt()).with_kinks(vec![0.0]),
                    &|t| Builtin::SqrtAbs.derivative(t),
                    None,
                    &eps,
                    &Region::symmetric(0.5, 3.0, 251),
                    &q,
                )?,
            }
        }
        "antiderivative-exp-runge" => {
            let k = kernel(cfg, "exponential")?;
            let sweep = AntiderivativeSweep {
                solver: SolverConfig::new(40.0, cfg.n.unwrap_or(1 << 14)),
                compare_half_width: 10.0,
                p_norms: vec![f64::INFINITY, 2.0],
            };
            antiderivative_sweep(
                &k,
                &|t: f64| 1.0 / (1.0 + t * t),
                &f64::atan,
                &epsilons(cfg, &dyadic(1..=6))?,
                &sweep,
                &bumps(),
            )?
        }
        "antiderivative-power-gaussian" => {
            let k = match cfg.kernel {
                Some(_) => kernel(cfg, "power")?,
                None => KernelProfile::power(cfg.k_alpha.unwrap_or(-1.5))?,
            };
            let sweep = AntiderivativeSweep {
                solver: SolverConfig::new(16.0, cfg.n.unwrap_or(1 << 12)),
                compare_half_width: 8.0,
                p_norms: vec![2.0, 1.0, f64::INFINITY],
            };
            antiderivative_sweep(
                &k,
                &gaussian,
                &|t: f64| 0.5 * PI.sqrt() * libm::erf(t),
                &epsilons(cfg, &dyadic(1..=6))?,
                &sweep,
                &bumps(),
            )?
        }
        "zero-scaling" => {
            let k = kernel(cfg, "sine")?;
            zero_scaling_sweep(&k, &epsilons(cfg, &[1.0, 0.5, 0.25, 0.125])?, cfg.window.unwrap_or(2.5), 3)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown experiment `{other}`; expected derivative-gaussian, derivative-affine, \
                 derivative-sqrt-abs, antiderivative-exp-runge, antiderivative-power-gaussian, zero-scaling"
            )))
        }
    };
    write_output(cfg.output.as_deref(), &to_json(&envelope("sweep", cfg, &report)))
}

fn figure(cfg: &RunConfig) -> Result<()> {
    let q = quadrature(cfg)?;
    let eps = epsilons(cfg, &[1.0, 0.5, 0.25])?;
    let [a, b] = cfg.domain.unwrap_or([-3.0, 3.0]);
    let n = cfg.n.unwrap_or(601).max(2);
    let ts: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let curves = figure_gradcon(&eps, &ts, &q)?;
    write_output(cfg.output.as_deref(), &curves.to_csv())
}

fn threads() -> Result<()> {
    if let Ok(v) = std::env::var("NLCALC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("NLCALC_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(CliError::Usage("NLCALC_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    threads()?;
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cfg = file.merge(cli.flags());
    log::debug!("resolved config: {cfg:?}");
    match cli.command {
        Command::CheckKernel => check_kernel(&cfg),
        Command::Derive => derive(&cfg),
        Command::Antiderive => antiderive(&cfg),
        Command::Zeros => zeros(&cfg),
        Command::Sweep => sweep(&cfg),
        Command::Figure => figure(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::CheckFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
