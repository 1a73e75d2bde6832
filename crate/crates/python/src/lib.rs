//! Python bindings. Structured results come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use qisolab_core::config::ExperimentConfig;
use qisolab_core::eigensolve::{self, SolverConfig};
use qisolab_core::potential::{Perturbation, PotentialSpec};
use qisolab_core::traces::TestFunction;
use qisolab_core::{experiments, hadamard, pruefer, traces, weber, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Precondition(_)
        | Error::Config(_)
        | Error::InvalidPotential(_)
        | Error::InvalidGrid(_)
        | Error::WindowTooLarge { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Round-trips through `json.loads` so nested results become dicts.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// `x² + t·α(x) + ε·β(±x)` with the default bumps.
#[pyclass(name = "Potential", module = "qisolab", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct Potential(PotentialSpec);

#[pymethods]
impl Potential {
    #[new]
    #[pyo3(signature = (t = 0.05, eps = 0.05, reflect_beta = false))]
    fn new(t: f64, eps: f64, reflect_beta: bool) -> Self {
        let mut p = PotentialSpec::plus(t, eps);
        p.reflect_beta = reflect_beta;
        Self(p)
    }

    #[staticmethod]
    fn harmonic() -> Self {
        Self(PotentialSpec::harmonic())
    }

    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.0.eps
    }

    #[getter]
    fn reflect_beta(&self) -> bool {
        self.0.reflect_beta
    }

    fn partner(&self) -> Self {
        Self(self.0.partner())
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    /// List of `(name, passed, detail)` for each standing assumption.
    fn validate(&self) -> Vec<(String, bool, String)> {
        self.0
            .validate()
            .checks
            .into_iter()
            .map(|a| (a.name, a.passed, a.detail))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Potential(t={}, eps={}, reflect_beta={})",
            self.0.t,
            self.0.eps,
            if self.0.reflect_beta { "True" } else { "False" }
        )
    }
}

/// Grid and bisection settings.
#[pyclass(name = "SolverConfig", module = "qisolab", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySolverConfig(SolverConfig);

#[pymethods]
impl PySolverConfig {
    #[new]
    #[pyo3(signature = (half_length = 8.0, n = 15_999, tol = None, max_eigenvalues = 5_000))]
    fn new(half_length: f64, n: usize, tol: Option<f64>, max_eigenvalues: usize) -> Self {
        Self(SolverConfig {
            half_length,
            n,
            tol,
            max_eigenvalues,
        })
    }

    #[getter]
    fn half_length(&self) -> f64 {
        self.0.half_length
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    fn __repr__(&self) -> String {
        format!(
            "SolverConfig(half_length={}, n={}, tol={:?}, max_eigenvalues={})",
            self.0.half_length, self.0.n, self.0.tol, self.0.max_eigenvalues
        )
    }
}

fn solver(config: Option<PySolverConfig>) -> SolverConfig {
    config.map_or_else(SolverConfig::default, |c| c.0)
}

#[pyclass(name = "Spectrum", module = "qisolab", frozen)]
struct PySpectrum(eigensolve::Spectrum);

#[pymethods]
impl PySpectrum {
    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.0.energy
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues.clone()
    }

    #[getter]
    fn error_estimates(&self) -> Vec<f64> {
        self.0.error_estimates.clone()
    }

    /// `[(value, error_bound), ...]` for `self − other` on shared grids.
    fn correlated_difference(&self, other: &PySpectrum) -> PyResult<Vec<(f64, f64)>> {
        let d = self.0.correlated_difference(&other.0).map_err(py_err)?;
        Ok(d.iter().map(|d| (d.value, d.bound())).collect())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(h={}, energy={}, count={})", self.0.h, self.0.energy, self.0.len())
    }
}

#[pyfunction]
#[pyo3(signature = (potential, h, energy, config = None))]
fn spectrum(potential: Potential, h: f64, energy: f64, config: Option<PySolverConfig>) -> PyResult<PySpectrum> {
    eigensolve::spectrum(&potential.0, h, energy, &solver(config))
        .map(PySpectrum)
        .map_err(py_err)
}

#[pyfunction]
fn isospectral_distance<'py>(
    py: Python<'py>,
    plus: &PySpectrum,
    minus: &PySpectrum,
    energy: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let d = traces::isospectral_distance(&plus.0, &minus.0, energy).map_err(py_err)?;
    to_py(py, &d)
}

/// Sweep of the isospectral distance over `h_list` with the decay fit.
#[pyfunction]
#[pyo3(signature = (potential, h_list, energy = 1.2, config = None))]
fn gap_sweep<'py>(
    py: Python<'py>,
    potential: Potential,
    h_list: Vec<f64>,
    energy: f64,
    config: Option<PySolverConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = solver(config);
    let curve = py
        .detach(|| traces::gap_sweep(&potential.0, &h_list, energy, &cfg))
        .map_err(py_err)?;
    to_py(py, &curve)
}

#[pyfunction]
#[pyo3(signature = (potential, h, config = None))]
fn ground_state_excess<'py>(
    py: Python<'py>,
    potential: Potential,
    h: f64,
    config: Option<PySolverConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let ex = eigensolve::ground_state_excess(&potential.0, h, &solver(config)).map_err(py_err)?;
    to_py(py, &ex)
}

/// `(lambda, error_estimate)` by Prüfer shooting on `[−L, L]`.
#[pyfunction]
#[pyo3(signature = (potential, h, j, half_length = 8.0))]
fn shoot_eigenvalue(py: Python<'_>, potential: Potential, h: f64, j: usize, half_length: f64) -> PyResult<(f64, f64)> {
    let shot = py
        .detach(|| pruefer::shoot_eigenvalue(&potential.0, h, j, half_length))
        .map_err(py_err)?;
    Ok((shot.lambda, shot.error_estimate))
}

/// `∫ β(±x) u_j²` as `(value, extrapolated, error_estimate)`.
#[pyfunction]
#[pyo3(signature = (potential, h, j = 1, reflected = false, config = None))]
fn variational_derivative(
    potential: Potential,
    h: f64,
    j: usize,
    reflected: bool,
    config: Option<PySolverConfig>,
) -> PyResult<(f64, f64, f64)> {
    let dir = Perturbation::bump(potential.0.beta, reflected);
    let v = hadamard::variational_derivative(&potential.0, h, j, dir, &solver(config)).map_err(py_err)?;
    Ok((v.value, v.extrapolated, v.error_estimate))
}

/// Central difference of `λ_j` along `β(±x)`.
#[pyfunction]
#[pyo3(signature = (potential, h, j = 1, eps_fd = 1e-5, reflected = false, config = None))]
fn fd_oracle(
    potential: Potential,
    h: f64,
    j: usize,
    eps_fd: f64,
    reflected: bool,
    config: Option<PySolverConfig>,
) -> PyResult<f64> {
    let dir = Perturbation::bump(potential.0.beta, reflected);
    hadamard::fd_oracle(&potential.0, h, j, dir, eps_fd, &solver(config)).map_err(py_err)
}

/// Ground-state derivatives along `β(x)` and `β(−x)` of `x² + tα`.
#[pyfunction]
#[pyo3(signature = (t = 0.05, h = 1.0, config = None))]
fn asymmetry_witness<'py>(
    py: Python<'py>,
    t: f64,
    h: f64,
    config: Option<PySolverConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let base = PotentialSpec::plus(t, 0.0);
    let w = hadamard::asymmetry_witness(&base, h, base.beta, &solver(config)).map_err(py_err)?;
    to_py(py, &w)
}

/// Weber function matched to the `h = 1` ground state of `x² + tα`, with
/// `a`, `z₀`, `c` and the sampled curve.
#[pyfunction]
#[pyo3(signature = (t = 0.05, x_left = -8.0, x_right = 8.0, config = None))]
fn weber_solution<'py>(
    py: Python<'py>,
    t: f64,
    x_left: f64,
    x_right: f64,
    config: Option<PySolverConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let base = PotentialSpec::plus(t, 0.0);
    let u1 = eigensolve::eigenfunction(&base, 1.0, 1, &solver(config)).map_err(py_err)?;
    let w = weber::solve_weber(u1.lambda.max(1.0), x_left, x_right, &u1).map_err(py_err)?;
    let m = weber::compute_c(&w, &u1).map_err(py_err)?;
    #[derive(Serialize)]
    struct Out<'a> {
        lambda1: f64,
        a: f64,
        z0: Option<f64>,
        c: f64,
        zeros: &'a [f64],
        critical_points: &'a [f64],
        x: Vec<f64>,
        w: Vec<f64>,
        properties: Vec<(&'a str, bool)>,
    }
    let props = weber::check_properties(&w);
    let out = Out {
        lambda1: w.lambda1,
        a: w.a,
        z0: w.z0,
        c: m.c,
        zeros: &w.zeros,
        critical_points: &w.critical_points,
        x: w.samples.iter().map(|s| s.x).collect(),
        w: w.samples.iter().map(|s| s.w).collect(),
        properties: props
            .iter()
            .chain(&m.assertions)
            .map(|a| (a.name.as_str(), a.passed))
            .collect(),
    };
    to_py(py, &out)
}

fn test_function(scale: Option<f64>, support: Option<(f64, f64)>) -> PyResult<TestFunction> {
    match (scale, support) {
        (Some(scale), None) => Ok(TestFunction::Exponential { scale }),
        (None, Some((lo, hi))) => Ok(TestFunction::Bump { lo, hi }),
        (None, None) => Ok(TestFunction::Exponential { scale: 1.0 }),
        _ => Err(PyValueError::new_err("give either scale or support, not both")),
    }
}

/// `Σ f(λ_j)` for `f = e^{−sE}` (default) or a bump on `support`.
#[pyfunction]
#[pyo3(signature = (potential, h, scale = None, support = None, config = None))]
fn spectral_density(
    potential: Potential,
    h: f64,
    scale: Option<f64>,
    support: Option<(f64, f64)>,
    config: Option<PySolverConfig>,
) -> PyResult<(f64, f64)> {
    let f = test_function(scale, support)?;
    let d = traces::spectral_density(&potential.0, h, f, &solver(config)).map_err(py_err)?;
    Ok((d.value, d.error_estimate))
}

/// `∬ f(ξ² + V)` as `(value, error)`.
#[pyfunction]
#[pyo3(signature = (potential, scale = None, support = None))]
fn weyl_term(potential: Potential, scale: Option<f64>, support: Option<(f64, f64)>) -> PyResult<(f64, f64)> {
    let f = test_function(scale, support)?;
    let a = traces::weyl_term(&potential.0, f).map_err(py_err)?;
    Ok((a.value, a.error))
}

/// Runs an experiment from a JSON config (missing fields default) and
/// returns the report.
#[pyfunction]
#[pyo3(signature = (config_json = "{}"))]
fn run_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let report = py.detach(|| experiments::run(&cfg)).map_err(py_err)?;
    to_py(py, &report)
}

#[pymodule]
fn qisolab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Potential>()?;
    m.add_class::<PySolverConfig>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(isospectral_distance, m)?)?;
    m.add_function(wrap_pyfunction!(gap_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(ground_state_excess, m)?)?;
    m.add_function(wrap_pyfunction!(shoot_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(variational_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(fd_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(asymmetry_witness, m)?)?;
    m.add_function(wrap_pyfunction!(weber_solution, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_density, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_term, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
