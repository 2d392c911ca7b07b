//! Python bindings. Structured results cross the boundary as plain dicts
//! and lists decoded from the core types' JSON form.

use carterlab::config::parse_config_with;
use carterlab::curvature::{spot_check_random, verify_certificates, Fault, SymParams};
use carterlab::horizon::{self, ChargeSeries};
use carterlab::kn;
use carterlab::metric::{build_coefficients, CarterParams, SlabSpec};
use carterlab::modes::{self, AngularBc, Family};
use carterlab::runner;
use carterlab::slab::{self, DiscreteSlab, EigenMethod, OperatorPair};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, json: serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(&json).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn as_json(x: impl serde::Serialize) -> PyResult<serde_json::Value> {
    serde_json::to_value(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Parses a kebab-case enum name such as "reissner-nordstrom".
fn parse_name<T: serde::de::DeserializeOwned>(name: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_string())).map_err(value_err)
}

fn fault(flip: bool) -> Fault {
    if flip {
        Fault::FlipGtphiTerm
    } else {
        Fault::None
    }
}

/// Full symbolic curvature certificate for the generic Carter family (or
/// its Kerr–Newman restriction). Raises ValueError if any numerator is nonzero.
#[pyfunction]
#[pyo3(signature = (kerr_newman=false, flip_cross_term=false))]
fn certificate(py: Python<'_>, kerr_newman: bool, flip_cross_term: bool) -> PyResult<Bound<'_, PyAny>> {
    let params = if kerr_newman { SymParams::kn_generic() } else { SymParams::generic() };
    let rep = py.detach(|| verify_certificates(params, fault(flip_cross_term))).map_err(value_err)?;
    to_py(py, as_json(rep)?)
}

#[pyfunction]
#[pyo3(signature = (points, seed=0, flip_cross_term=false))]
fn spot_check(py: Python<'_>, points: usize, seed: u64, flip_cross_term: bool) -> PyResult<Bound<'_, PyAny>> {
    let rep = py.detach(|| spot_check_random(points, seed, fault(flip_cross_term))).map_err(value_err)?;
    to_py(py, as_json(rep)?)
}

#[pyfunction]
#[pyo3(name = "horizon_constants")]
fn py_horizon_constants(py: Python<'_>, mass: f64, a: f64, q: f64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, as_json(kn::horizon_constants(mass, a, q).map_err(value_err)?)?)
}

#[pyfunction]
#[pyo3(name = "sign_factor")]
fn py_sign_factor(mass: f64, a: f64, q: f64, r: f64) -> f64 {
    kn::sign_factor(mass, a, q, r)
}

#[pyfunction]
#[pyo3(signature = (mass, a, q, r_wall, resolution=200))]
fn nontrapping_margin(py: Python<'_>, mass: f64, a: f64, q: f64, r_wall: f64, resolution: usize) -> PyResult<Bound<'_, PyAny>> {
    let rep = kn::nontrapping_margin(mass, a, q, r_wall, resolution).map_err(value_err)?;
    to_py(py, as_json(rep)?)
}

#[pyfunction]
#[pyo3(signature = (mass, a, q, r_wall, tol=1e-12))]
fn wall_obstruction(py: Python<'_>, mass: f64, a: f64, q: f64, r_wall: f64, tol: f64) -> PyResult<Bound<'_, PyAny>> {
    let rep = kn::wall_jordan_obstruction(mass, a, q, r_wall, tol).map_err(value_err)?;
    to_py(py, as_json(rep)?)
}

/// `family` is one of "kerr", "reissner-nordstrom", "kerr-newman",
/// "extremal-kerr-newman".
#[pyfunction]
fn zero_frequency_classify<'py>(py: Python<'py>, family: &str, mass: f64, a: f64, q: f64, ell: usize) -> PyResult<Bound<'py, PyAny>> {
    let fam: Family = parse_name(family)?;
    let rep = modes::zero_frequency_classify(fam, mass, a, q, ell).map_err(value_err)?;
    to_py(py, as_json(rep)?)
}

/// Lowest separation constants of the angular problem on a Kerr background.
#[pyfunction]
#[pyo3(signature = (mass, a, omega, m, count, interval=(-1.0, 1.0), bc="regular-endpoint"))]
fn angular_eigenvalues(mass: f64, a: f64, omega: f64, m: i32, count: usize, interval: (f64, f64), bc: &str) -> PyResult<Vec<f64>> {
    let bc: AngularBc = parse_name(bc)?;
    let co = build_coefficients(&CarterParams::kerr(mass, a));
    Ok(modes::angular_eigenvalues(&co, omega, m, interval, bc, count).map_err(value_err)?.values)
}

/// Reflecting slab of a Carter-family background, discretized on an
/// (n+1)×(n+1) vertex grid for a fixed azimuthal number.
#[pyclass(module = "pycarterlab")]
struct Slab {
    ops: OperatorPair,
}

#[pymethods]
impl Slab {
    /// Kerr slab with mass `mass` and rotation `a`.
    #[new]
    #[pyo3(signature = (mass, a, r, x, n, m=0, margin=1e-3))]
    fn new(mass: f64, a: f64, r: (f64, f64), x: (f64, f64), n: usize, m: i32, margin: f64) -> PyResult<Self> {
        let spec = SlabSpec::new(r, x, margin).map_err(value_err)?;
        let co = build_coefficients(&CarterParams::kerr(mass, a));
        let slab = DiscreteSlab::carter(&co, &spec, n, n, m).map_err(value_err)?;
        Ok(Slab { ops: slab::assemble_operators(&slab) })
    }

    /// Unit-coefficient rectangle.
    #[staticmethod]
    #[pyo3(signature = (r, x, n, m=0))]
    fn flat(r: (f64, f64), x: (f64, f64), n: usize, m: i32) -> PyResult<Self> {
        let spec = SlabSpec::new(r, x, 1e-3).map_err(value_err)?;
        Ok(Slab { ops: slab::assemble_operators(&DiscreteSlab::flat(&spec, n, n, m)) })
    }

    fn __len__(&self) -> usize {
        self.ops.len()
    }

    /// Lowest `count` eigenvalues of H ψ = λ M_A ψ (m = 0 only).
    #[pyo3(signature = (count, method="auto", tol=1e-10))]
    fn spectrum(&self, py: Python<'_>, count: usize, method: &str, tol: f64) -> PyResult<Vec<f64>> {
        let method = match method {
            "auto" => EigenMethod::Auto,
            "dense" => EigenMethod::Dense,
            "shift-invert" => EigenMethod::ShiftInvert,
            other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        };
        let ops = &self.ops;
        let spec = py.detach(|| slab::solve_spectrum_with(ops, count, method, tol)).map_err(value_err)?;
        Ok(spec.values)
    }

    /// Quadratic pencil frequencies and the kernel structure of the generator.
    fn pencil_scan<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let ops = &self.ops;
        let rep = py.detach(|| slab::pencil_mode_scan(ops)).map_err(value_err)?;
        to_py(py, as_json(rep)?)
    }

    fn weighted_mean(&self, f: Vec<f64>) -> PyResult<f64> {
        if f.len() != self.ops.len() {
            return Err(PyValueError::new_err(format!("expected {} values, got {}", self.ops.len(), f.len())));
        }
        Ok(slab::weighted_mean(&self.ops, &f))
    }

    /// (vᵀM_A v, vᵀH v).
    fn forms(&self, v: Vec<f64>) -> PyResult<(f64, f64)> {
        if v.len() != self.ops.len() {
            return Err(PyValueError::new_err(format!("expected {} values, got {}", self.ops.len(), v.len())));
        }
        Ok((self.ops.mass_norm2(&v), self.ops.quadratic_form(&v)))
    }
}

/// Field on the extremal horizon collar [M, M + δc].
#[pyclass(module = "pycarterlab")]
struct ExtremalState {
    inner: horizon::ExtremalState,
    series: Option<ChargeSeries>,
}

#[pymethods]
impl ExtremalState {
    /// `data(r, x)` must return (u, ∂_r u, ∂_v u); x = cos θ.
    #[new]
    #[pyo3(signature = (mass, a, q, delta_c, n_r, n_theta, data))]
    fn new(mass: f64, a: f64, q: f64, delta_c: f64, n_r: usize, n_theta: usize, data: Bound<'_, PyAny>) -> PyResult<Self> {
        let err = std::cell::RefCell::new(None);
        let inner = horizon::ExtremalState::new(mass, a, q, delta_c, n_r, n_theta, |r, x| {
            match data.call1((r, x)).and_then(|v| v.extract::<(f64, f64, f64)>()) {
                Ok(t) => t,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    (f64::NAN, f64::NAN, f64::NAN)
                }
            }
        });
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(ExtremalState { inner: inner.map_err(value_err)?, series: None })
    }

    #[staticmethod]
    fn constant(mass: f64, a: f64, q: f64, c: f64, n_r: usize, n_theta: usize) -> PyResult<Self> {
        let inner = horizon::ExtremalState::constant(mass, a, q, c, n_r, n_theta).map_err(value_err)?;
        Ok(ExtremalState { inner, series: None })
    }

    fn charge(&self) -> f64 {
        horizon::extremal_charge(&self.inner)
    }

    fn charge_sphere(&self) -> f64 {
        horizon::extremal_charge_sphere(&self.inner)
    }

    fn dependence_window(&self) -> f64 {
        self.inner.dependence_window()
    }

    #[getter]
    fn v(&self) -> f64 {
        self.inner.v
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u.clone()
    }

    /// Advances `steps` steps of size `dv` (Reissner–Nordström scheme when
    /// a = 0, the tilted-slice scheme otherwise) and returns the charge series.
    fn evolve<'py>(&mut self, py: Python<'py>, dv: f64, steps: usize) -> PyResult<Bound<'py, PyAny>> {
        let state = self.inner.clone();
        let (end, series) = py
            .detach(|| {
                if state.a == 0.0 {
                    horizon::evolve_extremal_rn(state, dv, steps)
                } else {
                    horizon::evolve_extremal_kn(state, dv, steps)
                }
            })
            .map_err(value_err)?;
        self.inner = end;
        let out = to_py(py, as_json(&series)?);
        self.series = Some(series);
        out
    }

    /// Charge and tangential-decay report for the last evolution.
    fn nondecay<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let series = self
            .series
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("evolve() has not been called"))?;
        to_py(py, as_json(horizon::nondecay_report(&self.inner, series))?)
    }
}

/// Runs a TOML configuration exactly as the CLI would, without writing
/// files. Returns (exit_code, verdict, details).
#[pyfunction]
#[pyo3(signature = (text, overrides=Vec::new()))]
fn run_config<'py>(py: Python<'py>, text: &str, overrides: Vec<String>) -> PyResult<(i32, String, Bound<'py, PyAny>)> {
    let cfg = parse_config_with(text, &overrides).map_err(value_err)?;
    let out = py.detach(|| runner::execute(&cfg));
    Ok((out.code, out.verdict, to_py(py, out.details)?))
}

#[pymodule]
fn pycarterlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    m.add_function(wrap_pyfunction!(spot_check, m)?)?;
    m.add_function(wrap_pyfunction!(py_horizon_constants, m)?)?;
    m.add_function(wrap_pyfunction!(py_sign_factor, m)?)?;
    m.add_function(wrap_pyfunction!(nontrapping_margin, m)?)?;
    m.add_function(wrap_pyfunction!(wall_obstruction, m)?)?;
    m.add_function(wrap_pyfunction!(zero_frequency_classify, m)?)?;
    m.add_function(wrap_pyfunction!(angular_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_class::<Slab>()?;
    m.add_class::<ExtremalState>()?;
    m.add("SCHEMA_VERSION", carterlab::config::SCHEMA_VERSION)?;
    Ok(())
}
