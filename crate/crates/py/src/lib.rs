//! Python bindings for `nlcalc`.
//!
//! Structured results (reports, certificates, solver output) are returned
//! as plain dicts and lists.

use std::sync::Mutex;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;
use serde::Serialize;

use nlcalc::antiderivative::{self, ConstantPolicy, Reference, SolverConfig};
use nlcalc::derivative::{self, Callable, GridFunction, QuadratureConfig};
use nlcalc::kernels::{self, CheckConfig, KernelName, KernelProfile, Requirement};
use nlcalc::spectral;

create_exception!(nlcalc_py, NumericalError, PyRuntimeError);

fn err(e: nlcalc::Error) -> PyErr {
    use nlcalc::Error::*;
    match e {
        UnknownKernel(_) | InvalidParameter(_) | Parse(_) | GridMismatch(_) | Precondition(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => NumericalError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn quad(tolerance: Option<f64>) -> QuadratureConfig {
    let mut q = QuadratureConfig::default();
    if let Some(t) = tolerance {
        q.tolerance = t;
    }
    q
}

/// An unscaled anti-symmetric kernel.
#[pyclass(name = "Kernel", module = "nlcalc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel {
    inner: KernelProfile,
}

#[pymethods]
impl PyKernel {
    /// `name` is one of indicator, exponential, sine, flat, power;
    /// `power` needs `k_alpha`.
    #[new]
    #[pyo3(signature = (name, k_alpha=None))]
    fn new(name: &str, k_alpha: Option<f64>) -> PyResult<Self> {
        let n: KernelName = name.parse().map_err(err)?;
        Ok(Self { inner: kernels::builtin_kernel(n, k_alpha).map_err(err)? })
    }

    /// Kernel from samples on `s >= 0` (extended by anti-symmetry).
    #[staticmethod]
    fn tabulated(name: &str, s: Vec<f64>, values: Vec<f64>, support_radius: f64) -> PyResult<Self> {
        Ok(Self {
            inner: KernelProfile::tabulated(name, s, values, support_radius, None).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn support_radius(&self) -> Option<f64> {
        self.inner.support_radius()
    }

    fn __call__(&self, s: f64) -> f64 {
        self.inner.eval(s)
    }

    fn dipole(&self) -> PyResult<f64> {
        self.inner.dipole().map_err(err)
    }

    #[pyo3(signature = (j, absolute=false))]
    fn moment(&self, j: u32, absolute: bool) -> PyResult<f64> {
        self.inner.moment(j, absolute).map_err(err)
    }

    fn c_alpha(&self) -> PyResult<f64> {
        spectral::c_alpha(&self.inner).map_err(err)
    }

    fn c_prime_alpha(&self) -> PyResult<f64> {
        spectral::c_prime_alpha(&self.inner).map_err(err)
    }

    fn scale(&self, epsilon: f64) -> PyResult<PyScaledKernel> {
        Ok(PyScaledKernel { inner: kernels::scale(&self.inner, epsilon).map_err(err)? })
    }

    /// Nonnegative real zeros of the unscaled spectrum on `[0, window]`.
    #[pyo3(signature = (window, resolution=64))]
    fn find_zeros(&self, py: Python<'_>, window: f64, resolution: usize) -> PyResult<Vec<(f64, u32)>> {
        let k = self.inner.clone();
        let set = py.detach(|| spectral::find_zeros(&k, window, resolution)).map_err(err)?;
        Ok(set.zeros.iter().map(|z| (z.xi, z.multiplicity)).collect())
    }

    /// Full admissibility report as a dict.
    fn check(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let k = self.inner.clone();
        let report = py.detach(|| kernels::check_admissibility(&k, &CheckConfig::default()));
        to_py(py, &report)
    }

    /// Whether every named requirement holds.
    fn satisfies(&self, py: Python<'_>, requirements: Vec<String>) -> PyResult<bool> {
        let reqs = requirements
            .iter()
            .map(|r| r.parse::<Requirement>())
            .collect::<nlcalc::Result<Vec<_>>>()
            .map_err(err)?;
        let k = self.inner.clone();
        let report = py.detach(|| kernels::check_admissibility(&k, &CheckConfig::default()));
        Ok(reqs.into_iter().all(|r| report.passes(r)))
    }

    fn __repr__(&self) -> String {
        format!("Kernel({:?})", self.inner.name())
    }
}

/// A kernel at scale `epsilon`.
#[pyclass(name = "ScaledKernel", module = "nlcalc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScaledKernel {
    inner: kernels::ScaledKernel,
}

#[pymethods]
impl PyScaledKernel {
    #[new]
    fn new(kernel: &PyKernel, epsilon: f64) -> PyResult<Self> {
        kernel.scale(epsilon)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    #[getter]
    fn kernel(&self) -> PyKernel {
        PyKernel { inner: self.inner.base().clone() }
    }

    fn dipole(&self) -> f64 {
        self.inner.dipole()
    }

    fn __call__(&self, s: f64) -> f64 {
        self.inner.eval(s)
    }

    /// Imaginary part of the Fourier multiplier at `xi`.
    fn transform(&self, xi: f64) -> PyResult<f64> {
        spectral::transform(&self.inner, xi).map_err(err)
    }

    fn deficit(&self, xi: f64) -> PyResult<f64> {
        spectral::deficit(&self.inner, xi).map_err(err)
    }

    fn far_field_threshold(&self) -> PyResult<f64> {
        spectral::far_field_threshold(&self.inner).map_err(err)
    }

    fn near_field_certificate(&self, py: Python<'_>, xis: Vec<f64>) -> PyResult<Py<PyAny>> {
        let c = spectral::near_field_certificate(&self.inner, &xis).map_err(err)?;
        to_py(py, &c)
    }

    fn far_field_certificate(&self, py: Python<'_>, xis: Vec<f64>) -> PyResult<Py<PyAny>> {
        let c = spectral::far_field_certificate(&self.inner, &xis).map_err(err)?;
        to_py(py, &c)
    }

    /// `D u` at `points` for a Python callable `u`.
    #[pyo3(signature = (u, points, kinks=None, tolerance=None))]
    fn apply(
        &self,
        py: Python<'_>,
        u: Py<PyAny>,
        points: Vec<f64>,
        kinks: Option<Vec<f64>>,
        tolerance: Option<f64>,
    ) -> PyResult<Vec<f64>> {
        let failure: Mutex<Option<PyErr>> = Mutex::new(None);
        let f = |t: f64| {
            Python::attach(|py| match u.call1(py, (t,)).and_then(|v| v.extract::<f64>(py)) {
                Ok(v) => v,
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    f64::NAN
                }
            })
        };
        let c = Callable::new(f).with_kinks(kinks.unwrap_or_default());
        let q = quad(tolerance);
        let out = py.detach(|| derivative::apply(&self.inner, &c, &points, &q));
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        out.map_err(err)
    }

    /// `D u` at `points` for samples of `u` on the uniform grid
    /// `a + i (b - a)/len(values)`.
    #[pyo3(signature = (a, b, values, points, tolerance=None))]
    fn apply_grid(
        &self,
        py: Python<'_>,
        a: f64,
        b: f64,
        values: Vec<f64>,
        points: Vec<f64>,
        tolerance: Option<f64>,
    ) -> PyResult<Vec<f64>> {
        let g = GridFunction::new(a, b, values).map_err(err)?;
        let q = quad(tolerance);
        py.detach(|| derivative::apply(&self.inner, &g, &points, &q)).map_err(err)
    }

    /// Solves `D u = f` on `[-half_width, half_width)`. `f` is a callable
    /// sampled on `n` points or a sequence of `n` samples.
    #[pyo3(signature = (f, half_width, n=None, tau=1e-8, constant_policy="zero-mean", boundary_tol=1e-3, strict=false))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        py: Python<'_>,
        f: Bound<'_, PyAny>,
        half_width: f64,
        n: Option<usize>,
        tau: f64,
        constant_policy: &str,
        boundary_tol: f64,
        strict: bool,
    ) -> PyResult<Py<PyAny>> {
        let values: Vec<f64> = if f.is_callable() {
            let n = n.ok_or_else(|| PyValueError::new_err("n is required when f is callable"))?;
            let h = 2.0 * half_width / n as f64;
            (0..n)
                .map(|i| f.call1((-half_width + i as f64 * h,))?.extract::<f64>())
                .collect::<PyResult<_>>()?
        } else {
            let v: Vec<f64> = f.extract()?;
            if n.is_some_and(|n| n != v.len()) {
                return Err(PyValueError::new_err("n does not match the number of samples"));
            }
            v
        };
        let mut cfg = SolverConfig::new(half_width, values.len());
        cfg.null_threshold = tau;
        cfg.constant_policy = constant_policy.parse::<ConstantPolicy>().map_err(err)?;
        cfg.boundary_tolerance = boundary_tol;
        cfg.strict = strict;
        let grid = GridFunction::new(-half_width, half_width, values).map_err(err)?;
        let s = &self.inner;
        let res = py.detach(|| antiderivative::solve(s, &grid, &cfg)).map_err(err)?;
        let out = pyo3::types::PyDict::new(py);
        out.set_item("t", PyList::new(py, res.particular.points())?)?;
        out.set_item("values", PyList::new(py, res.particular.values())?)?;
        out.set_item("null_modes", to_py(py, &res.null_modes)?)?;
        out.set_item("residual", res.residual)?;
        out.set_item("mean_slope", res.mean_slope)?;
        out.set_item("warnings", res.warnings)?;
        Ok(out.into_any().unbind())
    }

    fn annihilation_residual(&self, n: i64) -> PyResult<f64> {
        derivative::annihilation_residual(&self.inner, n, &QuadratureConfig::default()).map_err(err)
    }

    fn __repr__(&self) -> String {
        self.inner.describe()
    }
}

/// Imaginary part of the multiplier of `kernel` at scale `epsilon`.
#[pyfunction]
fn transform(kernel: &PyKernel, epsilon: f64, xi: f64) -> PyResult<f64> {
    kernel.scale(epsilon)?.transform(xi)
}

/// Homogeneous modes `(xi, k)` of `kernel` at scale `epsilon` with
/// `|xi| < window`.
#[pyfunction]
fn homogeneous_basis(kernel: &PyKernel, epsilon: f64, window: f64) -> PyResult<Vec<(f64, u32)>> {
    let modes = antiderivative::homogeneous_basis(&kernel.inner, epsilon, window).map_err(err)?;
    Ok(modes.into_iter().map(|m| (m.xi, m.k)).collect())
}

/// Named closed-form antiderivative evaluated at `t`.
#[pyfunction]
fn closed_form_reference(name: &str, epsilon: f64, t: f64) -> PyResult<f64> {
    let r: Reference = name.parse().map_err(err)?;
    Ok(antiderivative::closed_form_reference(r, epsilon, t))
}

#[pymodule]
fn nlcalc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyScaledKernel>()?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_basis, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_reference, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
