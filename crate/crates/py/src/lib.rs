//! Python bindings: parameter set, closed forms, Monte Carlo and planner.
//! Structured results come back as plain dicts.

use hetnet::analytic;
use hetnet::planner::{self, PlanningRequest};
use hetnet::simulator::{self, MonteCarloConfig, RateMode, Scheme};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Linear-unit parameter set (densities per km², powers in W).
#[pyclass(name = "SystemParams", module = "hetnet_py", skip_from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    #[pyo3(get, set)]
    lambda_macro: f64,
    #[pyo3(get, set)]
    lambda_micro: f64,
    #[pyo3(get, set)]
    lambda_ue: f64,
    #[pyo3(get, set)]
    p_macro: f64,
    #[pyo3(get, set)]
    p_micro: f64,
    #[pyo3(get, set)]
    gamma: f64,
    #[pyo3(get, set)]
    bandwidth_hz: f64,
    #[pyo3(get, set)]
    reuse: u32,
    #[pyo3(get, set)]
    sir_threshold: f64,
    #[pyo3(get, set)]
    rate_threshold: f64,
    #[pyo3(get, set)]
    noise_power: f64,
}

impl From<hetnet::SystemParams> for PySystemParams {
    fn from(p: hetnet::SystemParams) -> Self {
        Self {
            lambda_macro: p.lambda_macro,
            lambda_micro: p.lambda_micro,
            lambda_ue: p.lambda_ue,
            p_macro: p.p_macro,
            p_micro: p.p_micro,
            gamma: p.gamma,
            bandwidth_hz: p.bandwidth_hz,
            reuse: p.reuse,
            sir_threshold: p.sir_threshold,
            rate_threshold: p.rate_threshold,
            noise_power: p.noise_power,
        }
    }
}

impl PySystemParams {
    fn core(&self) -> PyResult<hetnet::SystemParams> {
        hetnet::SystemParams {
            lambda_macro: self.lambda_macro,
            lambda_micro: self.lambda_micro,
            lambda_ue: self.lambda_ue,
            p_macro: self.p_macro,
            p_micro: self.p_micro,
            gamma: self.gamma,
            bandwidth_hz: self.bandwidth_hz,
            reuse: self.reuse,
            sir_threshold: self.sir_threshold,
            rate_threshold: self.rate_threshold,
            noise_power: self.noise_power,
        }
        .validate()
        .map_err(value_err)
    }
}

#[pymethods]
impl PySystemParams {
    /// Keyword arguments override the default parameter set.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut p = Self::from(hetnet::SystemParams::default());
        if let Some(kw) = kwargs {
            let py = kw.py();
            let obj = Bound::new(py, p)?;
            for (k, v) in kw.iter() {
                let name: String = k.extract()?;
                if !obj.hasattr(name.as_str())? {
                    return Err(value_err(format!("unknown parameter {name:?}")));
                }
                obj.setattr(name.as_str(), v)?;
            }
            p = obj.borrow().clone();
        }
        p.core()?;
        Ok(p)
    }

    /// λ_M = 1, λ_μ = 5, λ_u = 100 per km², P_μ = 26 dBm.
    #[staticmethod]
    fn comparison_defaults() -> Self {
        hetnet::SystemParams::comparison_defaults().into()
    }

    fn with_reuse(&self, k: u32) -> Self {
        Self { reuse: k, ..self.clone() }
    }

    fn with_density_ratio(&self, ratio: f64) -> Self {
        Self { lambda_micro: ratio * self.lambda_macro, ..self.clone() }
    }

    fn validate(&self) -> PyResult<()> {
        self.core().map(|_| ())
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemParams(lambda_macro={}, lambda_micro={}, lambda_ue={}, p_macro={}, p_micro={}, gamma={}, \
             bandwidth_hz={}, reuse={}, sir_threshold={}, rate_threshold={}, noise_power={})",
            self.lambda_macro,
            self.lambda_micro,
            self.lambda_ue,
            self.p_macro,
            self.p_micro,
            self.gamma,
            self.bandwidth_hz,
            self.reuse,
            self.sir_threshold,
            self.rate_threshold,
            self.noise_power
        )
    }
}

#[pyfunction]
fn c_gamma(gamma: f64) -> PyResult<f64> {
    analytic::c_gamma(gamma).map_err(value_err)
}

/// (D(γ,T), regime) for a linear threshold.
#[pyfunction]
fn band_coverage(gamma: f64, threshold: f64) -> PyResult<(f64, String)> {
    let b = analytic::band_coverage(gamma, threshold).map_err(value_err)?;
    let regime = serde_json::to_value(b.regime).map_err(value_err)?;
    Ok((b.value, regime.as_str().unwrap_or_default().to_string()))
}

#[pyfunction]
fn coverage<'py>(py: Python<'py>, params: PyRef<'_, PySystemParams>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &analytic::coverage_report(&params.core()?).map_err(value_err)?)
}

#[pyfunction]
fn outage(params: PyRef<'_, PySystemParams>) -> PyResult<f64> {
    analytic::outage(&params.core()?).map_err(value_err)
}

#[pyfunction]
fn rate_coverage<'py>(py: Python<'py>, params: PyRef<'_, PySystemParams>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &analytic::rate_coverage(&params.core()?).map_err(value_err)?)
}

#[pyfunction]
fn mean_rate(params: PyRef<'_, PySystemParams>) -> PyResult<f64> {
    analytic::mean_rate(&params.core()?).map_err(value_err)
}

/// Estimates keyed by metric name, plus the scheme.
#[pyfunction]
#[pyo3(signature = (params, runs=10_000, seed=0x5eed, scheme="prioritized-sir", rate_mode="analytic-average", side=20.0, count_radius=3.0))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo<'py>(
    py: Python<'py>,
    params: PyRef<'_, PySystemParams>,
    runs: usize,
    seed: u64,
    scheme: &str,
    rate_mode: &str,
    side: f64,
    count_radius: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params.core()?;
    let rate_mode: RateMode =
        serde_json::from_value(serde_json::Value::String(rate_mode.to_string())).map_err(value_err)?;
    let cfg = MonteCarloConfig {
        runs,
        seed,
        scheme: scheme.parse::<Scheme>().map_err(value_err)?,
        rate_mode,
        side,
        count_radius,
        ..Default::default()
    };
    let res = py.detach(|| simulator::monte_carlo(&p, &cfg)).map_err(value_err)?;
    let mut out = serde_json::Map::new();
    out.insert("scheme".into(), serde_json::Value::String(res.scheme.name().into()));
    for e in res.estimates() {
        out.insert(e.metric.clone(), serde_json::to_value(e).map_err(value_err)?);
    }
    to_py(py, &out)
}

#[pyfunction]
#[pyo3(signature = (gamma, threshold, outage_max=0.1))]
fn feasibility_floor(gamma: f64, threshold: f64, outage_max: f64) -> PyResult<u32> {
    planner::feasibility_floor(gamma, threshold, outage_max).map_err(value_err)
}

/// Planner solution for a JSON request; defaults to the reference request.
#[pyfunction]
#[pyo3(signature = (request=None))]
fn plan<'py>(py: Python<'py>, request: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let req = match request {
        Some(text) => PlanningRequest::from_json(text).map_err(value_err)?,
        None => PlanningRequest::default(),
    };
    to_py(py, &planner::solve(&req).map_err(value_err)?)
}

#[pymodule]
fn hetnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_function(wrap_pyfunction!(c_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(band_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(outage, m)?)?;
    m.add_function(wrap_pyfunction!(rate_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(mean_rate, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_floor, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    Ok(())
}
