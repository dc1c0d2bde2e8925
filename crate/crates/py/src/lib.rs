//! Python module `jumpcurv`.

use jumpcurv::bounds::{assumption_a_bound, bennett as bennett_fn, deviation_bound as deviation_bound_fn, BoundParams};
use jumpcurv::curvature::{birth_death_curvature, check_assumption_a, jump_constants, CurvatureCertificate};
use jumpcurv::metric::{PathMetric, TailRule};
use jumpcurv::process::{BirthDeathRates, StationaryMeasure};
use jumpcurv::simulate::{mm_infinity_exact_law, simulate_replica};
use jumpcurv::transport::{wasserstein_path_1d, wasserstein_primal, DiscreteMeasure};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn label<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

#[pyclass(name = "PathMetric", module = "jumpcurv", frozen)]
struct PyPathMetric {
    inner: PathMetric,
}

#[pymethods]
impl PyPathMetric {
    /// Unit weights: the graph distance `|x − y|`.
    #[staticmethod]
    fn classical() -> Self {
        Self {
            inner: PathMetric::classical(),
        }
    }

    /// Weights `u_x = (x + 1)^{-1/2}`.
    #[staticmethod]
    fn inv_sqrt() -> Self {
        Self {
            inner: PathMetric::inv_sqrt(),
        }
    }

    /// Weight table continued by a constant, or by `scale·(x+1)^(−exponent)`
    /// when `exponent` is given.
    #[staticmethod]
    #[pyo3(signature = (weights, tail, exponent=None))]
    fn table(weights: Vec<f64>, tail: f64, exponent: Option<f64>) -> PyResult<Self> {
        let rule = match exponent {
            Some(exponent) => TailRule::PowerLaw { scale: tail, exponent },
            None => TailRule::Constant { value: tail },
        };
        Ok(Self {
            inner: PathMetric::table(weights, rule).map_err(value_error)?,
        })
    }

    fn weight(&self, x: usize) -> f64 {
        self.inner.weight(x)
    }

    fn distance(&self, x: usize, y: usize) -> f64 {
        self.inner.path_distance(x, y)
    }

    fn __repr__(&self) -> String {
        format!("PathMetric({:?})", self.inner.weights())
    }
}

#[pyclass(name = "BirthDeath", module = "jumpcurv", frozen)]
struct PyBirthDeath {
    inner: BirthDeathRates,
}

#[pymethods]
impl PyBirthDeath {
    /// `λ_x = λ`, `ν_x = νx`.
    #[staticmethod]
    #[pyo3(signature = (lam, nu, capacity=None))]
    fn mm_infinity(lam: f64, nu: f64, capacity: Option<usize>) -> PyResult<Self> {
        Self::wrap(BirthDeathRates::mm_infinity(lam, nu), capacity)
    }

    #[staticmethod]
    #[pyo3(signature = (lam, nu, capacity=None))]
    fn constant(lam: f64, nu: f64, capacity: Option<usize>) -> PyResult<Self> {
        Self::wrap(BirthDeathRates::constant(lam, nu), capacity)
    }

    /// Rate tables; the last entry of each repeats.
    #[staticmethod]
    #[pyo3(signature = (birth, death, capacity=None))]
    fn table(birth: Vec<f64>, death: Vec<f64>, capacity: Option<usize>) -> PyResult<Self> {
        Self::wrap(BirthDeathRates::table(birth, death), capacity)
    }

    fn birth(&self, x: usize) -> f64 {
        self.inner.birth(x)
    }

    fn death(&self, x: usize) -> f64 {
        self.inner.death(x)
    }

    /// Stationary probabilities up to the truncation where the tail mass
    /// drops below `tol`.
    #[pyo3(signature = (tol=1e-14))]
    fn stationary(&self, tol: f64) -> PyResult<Vec<f64>> {
        let pi = StationaryMeasure::compute(&self.inner, tol).map_err(value_error)?;
        Ok(pi.probs.clone())
    }

    /// One SSA path on `[0, t]` as `(jump_times, states)`, with the start
    /// state at time 0.
    #[pyo3(signature = (x0, t, seed, replica=0))]
    fn simulate(&self, py: Python<'_>, x0: usize, t: f64, seed: u64, replica: u64) -> PyResult<(Vec<f64>, Vec<usize>)> {
        let path = py
            .detach(|| simulate_replica(&self.inner, x0, t, seed, replica))
            .map_err(value_error)?;
        let mut times = vec![0.0];
        times.extend(&path.times);
        let mut states = vec![path.start];
        states.extend(&path.states);
        Ok((times, states))
    }
}

impl PyBirthDeath {
    fn wrap<E: std::fmt::Display>(
        rates: Result<BirthDeathRates, E>,
        capacity: Option<usize>,
    ) -> PyResult<Self> {
        let rates = rates.map_err(value_error)?;
        let inner = match capacity {
            Some(c) => rates.with_capacity(c).map_err(value_error)?,
            None => rates,
        };
        Ok(Self { inner })
    }
}

#[pyclass(name = "Curvature", module = "jumpcurv", frozen)]
struct PyCurvature {
    #[pyo3(get)]
    sigma: f64,
    #[pyo3(get)]
    method: String,
    #[pyo3(get)]
    tail: String,
    #[pyo3(get)]
    argmin: Option<usize>,
    #[pyo3(get)]
    tail_limit: Option<f64>,
    #[pyo3(get)]
    trace: Vec<f64>,
}

impl From<CurvatureCertificate> for PyCurvature {
    fn from(c: CurvatureCertificate) -> Self {
        Self {
            sigma: c.sigma,
            method: label(&c.method),
            tail: label(&c.tail),
            argmin: c.argmin,
            tail_limit: c.tail_limit,
            trace: c.trace,
        }
    }
}

#[pymethods]
impl PyCurvature {
    fn __repr__(&self) -> String {
        format!("Curvature(sigma={}, method={}, tail={})", self.sigma, self.method, self.tail)
    }
}

/// Curvature of a birth–death chain for a path metric.
#[pyfunction]
#[pyo3(signature = (rates, metric, truncation=1000))]
fn curvature(rates: &PyBirthDeath, metric: &PyPathMetric, truncation: usize) -> PyResult<PyCurvature> {
    birth_death_curvature(&rates.inner, &metric.inner, truncation)
        .map(Into::into)
        .map_err(value_error)
}

/// `(b, V²)`: largest jump and largest second moment of jump lengths.
#[pyfunction]
#[pyo3(signature = (rates, metric, truncation=1000))]
fn jump_moments(rates: &PyBirthDeath, metric: &PyPathMetric, truncation: usize) -> PyResult<(f64, f64)> {
    let c = jump_constants(&rates.inner, &metric.inner, truncation).map_err(value_error)?;
    Ok((c.b, c.v2))
}

/// `(K, C_A)` when the chain satisfies the birth–death moment condition.
#[pyfunction]
#[pyo3(signature = (rates, metric, truncation=1000))]
fn assumption_a(rates: &PyBirthDeath, metric: &PyPathMetric, truncation: usize) -> PyResult<(f64, f64)> {
    let a = check_assumption_a(&rates.inner, &metric.inner, truncation).map_err(value_error)?;
    Ok((a.k, a.c_a))
}

/// Bennett's function `(1+u)ln(1+u) − u`.
#[pyfunction]
fn bennett(u: f64) -> PyResult<f64> {
    bennett_fn(u).map_err(value_error)
}

/// Two-sided bound on the deviation of the time average beyond `y` plus
/// its bias.
#[pyfunction]
fn deviation_bound(sigma: f64, b: f64, v2: f64, lip: f64, t: f64, y: f64) -> PyResult<f64> {
    let p = BoundParams::new(sigma, b, v2, lip, 0.0).map_err(value_error)?;
    Ok(deviation_bound_fn(&p, t, y).probability)
}

/// Birth–death bound from `(K, C_A)`.
#[pyfunction]
fn deviation_bound_birth_death(k: f64, c_a: f64, sigma: f64, lip: f64, t: f64, y: f64) -> f64 {
    assumption_a_bound(k, c_a, sigma, lip, t, y).probability
}

/// `W₁(μ, ν)` for measures given as `(support, weights)` under a path metric.
#[pyfunction]
fn wasserstein(mu: (Vec<usize>, Vec<f64>), nu: (Vec<usize>, Vec<f64>), metric: &PyPathMetric) -> PyResult<f64> {
    let mu = DiscreteMeasure::new(mu.0, mu.1).map_err(value_error)?;
    let nu = DiscreteMeasure::new(nu.0, nu.1).map_err(value_error)?;
    let (w, _) = wasserstein_primal(&mu, &nu, &metric.inner).map_err(value_error)?;
    Ok(w)
}

/// Closed-form `W₁` on the path: `Σ u_x |F_μ(x) − F_ν(x)|`.
#[pyfunction]
fn wasserstein_path(mu: (Vec<usize>, Vec<f64>), nu: (Vec<usize>, Vec<f64>), metric: &PyPathMetric) -> PyResult<f64> {
    let mu = DiscreteMeasure::new(mu.0, mu.1).map_err(value_error)?;
    let nu = DiscreteMeasure::new(nu.0, nu.1).map_err(value_error)?;
    Ok(wasserstein_path_1d(&mu, &nu, &metric.inner))
}

/// Law of the M/M/∞ queue at time `t` on `0..=cap`.
#[pyfunction]
#[pyo3(signature = (x0, t, lam, nu, cap=100))]
fn mm_infinity_law(x0: usize, t: f64, lam: f64, nu: f64, cap: usize) -> PyResult<Vec<f64>> {
    Ok(mm_infinity_exact_law(x0, t, lam, nu, cap).map_err(value_error)?.pmf)
}

fn run_pipeline(py: Python<'_>, command: &str, config_json: &str) -> PyResult<String> {
    use jumpcurv_cli::ExperimentConfig;
    let cfg = ExperimentConfig::parse(config_json).map_err(value_error)?;
    let out = py.detach(|| -> Result<String, jumpcurv_cli::CliError> {
        let text = match command {
            "curvature" => serde_json::to_string(&jumpcurv_cli::run_curvature(&cfg)?),
            "bound" => serde_json::to_string(&jumpcurv_cli::run_bound(&cfg)?),
            "simulate" => serde_json::to_string(&jumpcurv_cli::run_simulate(&cfg)?),
            "verify" => serde_json::to_string(&jumpcurv_cli::run_verify(&cfg)?),
            _ => serde_json::to_string(&jumpcurv_cli::run_transport(&cfg)?),
        };
        Ok(text.expect("outputs serialize"))
    });
    out.map_err(|e| PyRuntimeError::new_err(format!("{e} (exit code {})", e.exit_code())))
}

/// Run a CLI subcommand on a JSON config string; returns the JSON output.
#[pyfunction]
fn run(py: Python<'_>, command: &str, config_json: &str) -> PyResult<String> {
    match command {
        "curvature" | "bound" | "simulate" | "verify" | "transport" => run_pipeline(py, command, config_json),
        other => Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    }
}

#[pymodule]
#[pyo3(name = "jumpcurv")]
fn jumpcurv_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPathMetric>()?;
    m.add_class::<PyBirthDeath>()?;
    m.add_class::<PyCurvature>()?;
    m.add_function(wrap_pyfunction!(curvature, m)?)?;
    m.add_function(wrap_pyfunction!(jump_moments, m)?)?;
    m.add_function(wrap_pyfunction!(assumption_a, m)?)?;
    m.add_function(wrap_pyfunction!(bennett, m)?)?;
    m.add_function(wrap_pyfunction!(deviation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(deviation_bound_birth_death, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein_path, m)?)?;
    m.add_function(wrap_pyfunction!(mm_infinity_law, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
