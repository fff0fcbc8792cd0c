//! Python bindings: a Distribution class over both input kinds, solver
//! entry points returning plain dicts, and the bundled example fixtures.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use pidkit_core::config::{Direction, SolverConfig};
use pidkit_core::io::ParsedInput;
use pidkit_core::prob::{mutual_information, VarSet};
use pidkit_core::{blackwell, broja, corpus, delta, io, ipid, lambda, risk, Error};

fn pyerr(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(m) | Error::SingularModel(m) => PyValueError::new_err(m),
        Error::Internal(m) => PyRuntimeError::new_err(m),
    }
}

/// serde_json output is the canonical report shape; mirror it as Python
/// dicts and lists so callers never touch JSON strings.
fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.unbind().into()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, to_py(py, val)?)?;
            }
            dict.unbind().into()
        }
    })
}

fn report<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value)
        .map_err(|e| PyRuntimeError::new_err(format!("serialization: {e}")))?;
    to_py(py, &v)
}

fn parse_direction(s: &str) -> PyResult<Direction> {
    match s {
        "x" => Ok(Direction::XMinusY),
        "y" => Ok(Direction::YMinusX),
        other => Err(PyValueError::new_err(format!(
            "direction must be 'x' or 'y', not {other:?}"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    tol: Option<f64>,
    restarts: Option<usize>,
    seed: Option<u64>,
    t_cap: Option<usize>,
    t_rank: Option<usize>,
) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(t) = tol {
        cfg.tol = t;
    }
    if let Some(r) = restarts {
        cfg.restarts = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.t_cap = t_cap;
    cfg.t_rank = t_rank;
    cfg
}

/// A joint distribution over (M, X, Y), either discrete or jointly
/// Gaussian. All report values come back as dicts in bits and nats.
#[pyclass]
struct Distribution {
    inner: ParsedInput,
}

impl Distribution {
    fn discrete_ref(&self) -> PyResult<&pidkit_core::prob::DiscreteTriple> {
        match &self.inner {
            ParsedInput::Discrete(d) => Ok(d),
            ParsedInput::Gaussian(_) => Err(PyValueError::new_err(
                "this operation supports only discrete distributions",
            )),
        }
    }
}

#[pymethods]
impl Distribution {
    /// pmf is flat row-major over m, then x, then y.
    #[staticmethod]
    fn discrete(km: usize, kx: usize, ky: usize, pmf: Vec<f64>) -> PyResult<Distribution> {
        let d = pidkit_core::prob::DiscreteTriple::new(km, kx, ky, pmf).map_err(pyerr)?;
        Ok(Distribution { inner: ParsedInput::Discrete(d) })
    }

    /// cov is flat row-major in block order M, X, Y.
    #[staticmethod]
    fn gaussian(dm: usize, dx: usize, dy: usize, cov: Vec<f64>) -> PyResult<Distribution> {
        let d = dm + dx + dy;
        if cov.len() != d * d {
            return Err(PyValueError::new_err(format!(
                "cov has {} entries, expected {}",
                cov.len(),
                d * d
            )));
        }
        let cov = nalgebra::DMatrix::from_row_slice(d, d, &cov);
        let g = pidkit_core::prob::GaussianTriple::new(dm, dx, dy, cov).map_err(pyerr)?;
        Ok(Distribution { inner: ParsedInput::Gaussian(g) })
    }

    /// Load the same JSON document format the CLI reads.
    #[staticmethod]
    fn from_json(path: std::path::PathBuf) -> PyResult<Distribution> {
        Ok(Distribution { inner: io::parse_input(&path).map_err(pyerr)? })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match &self.inner {
            ParsedInput::Discrete(_) => "discrete",
            ParsedInput::Gaussian(_) => "gaussian",
        }
    }

    fn mutual_informations(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let (i_mx, i_my, i_mxy) = match &self.inner {
            ParsedInput::Discrete(d) => (
                mutual_information(d, VarSet::M, VarSet::X, None).map_err(pyerr)?,
                mutual_information(d, VarSet::M, VarSet::Y, None).map_err(pyerr)?,
                mutual_information(d, VarSet::M, VarSet::XY, None).map_err(pyerr)?,
            ),
            ParsedInput::Gaussian(g) => (
                pidkit_core::prob::gaussian_mi(g, VarSet::M, VarSet::X, None).map_err(pyerr)?,
                pidkit_core::prob::gaussian_mi(g, VarSet::M, VarSet::Y, None).map_err(pyerr)?,
                pidkit_core::prob::gaussian_mi(g, VarSet::M, VarSet::XY, None).map_err(pyerr)?,
            ),
        };
        report(py, &serde_json::json!({"i_mx": i_mx, "i_my": i_my, "i_mxy": i_mxy}))
    }

    /// method is one of "delta", "broja", "lambda", "ipid"; lam is the
    /// trade-off weight for "lambda".
    #[pyo3(signature = (method, lam=None, tol=None, restarts=None, seed=None, t_cap=None, t_rank=None))]
    #[allow(clippy::too_many_arguments)]
    fn compute(
        &self,
        py: Python<'_>,
        method: &str,
        lam: Option<f64>,
        tol: Option<f64>,
        restarts: Option<usize>,
        seed: Option<u64>,
        t_cap: Option<usize>,
        t_rank: Option<usize>,
    ) -> PyResult<Py<PyAny>> {
        let cfg = build_config(tol, restarts, seed, t_cap, t_rank);
        let value = match (&self.inner, method) {
            (ParsedInput::Discrete(d), "delta") => {
                let pid = delta::delta_pid(d, &cfg).map_err(pyerr)?;
                serde_json::json!({
                    "atoms": pid.atoms,
                    "deficiency_x": pid.deficiency_x.value,
                    "deficiency_y": pid.deficiency_y.value,
                    "cyan_x": pid.cyan.cyan_x,
                    "cyan_y": pid.cyan.cyan_y,
                    "converged": pid.deficiency_x.converged && pid.deficiency_y.converged,
                })
            }
            (ParsedInput::Discrete(d), "broja") => {
                let pid = broja::tilde_pid(d, &cfg).map_err(pyerr)?;
                serde_json::json!({
                    "atoms": pid.atoms,
                    "gap_bits": pid.ui_x.gap.bits,
                    "iterations": pid.ui_x.iterations,
                    "converged": pid.ui_x.converged,
                })
            }
            (ParsedInput::Discrete(d), "lambda") => {
                let lam = lam.ok_or_else(|| {
                    PyValueError::new_err("method 'lambda' requires the lam argument")
                })?;
                let pid = lambda::lambda_pid(d, lam, &cfg).map_err(pyerr)?;
                serde_json::json!({
                    "atoms": pid.atoms,
                    "lambda": lam,
                    "total_x": pid.x.total,
                    "total_y": pid.y.total,
                    "kl_part_x": pid.x.kl_part,
                    "cmi_part_x": pid.x.cmi_part,
                    "converged": pid.x.converged && pid.y.converged,
                })
            }
            (ParsedInput::Discrete(d), "ipid") => {
                let pid = ipid::ipid(d, &cfg).map_err(pyerr)?;
                serde_json::json!({
                    "atoms": pid.atoms,
                    "deficiency_x": pid.x.value,
                    "deficiency_y": pid.y.value,
                    "certified": [pid.x.certified_lower_bound, pid.y.certified_lower_bound],
                    "converged": pid.x.converged && pid.y.converged,
                })
            }
            (ParsedInput::Gaussian(g), "ipid") => {
                let pid = ipid::ipid_gaussian(g, &cfg).map_err(pyerr)?;
                serde_json::json!({
                    "atoms": pid.atoms,
                    "deficiency_x": pid.x.value,
                    "deficiency_y": pid.y.value,
                    "bound_violations": pid.bound_violations,
                    "converged": pid.x.converged && pid.y.converged,
                })
            }
            (ParsedInput::Gaussian(_), m @ ("delta" | "broja" | "lambda")) => {
                return Err(PyValueError::new_err(format!(
                    "method {m:?} supports only discrete inputs"
                )));
            }
            (_, other) => {
                return Err(PyValueError::new_err(format!(
                    "unknown method {other:?}; use delta, broja, lambda, or ipid"
                )));
            }
        };
        to_py(py, &value)
    }

    /// Sufficiency verdicts in both directions plus the Le Cam deficiencies
    /// (discrete) or the PSD order and one-sided deficiencies (Gaussian).
    fn blackwell(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let value = match &self.inner {
            ParsedInput::Discrete(d) => {
                let px = d.conditional_channel(VarSet::X, VarSet::M).map_err(pyerr)?.channel;
                let py_ch = d.conditional_channel(VarSet::Y, VarSet::M).map_err(pyerr)?.channel;
                let xy = blackwell::sufficiency_discrete(&px, &py_ch).map_err(pyerr)?;
                let yx = blackwell::sufficiency_discrete(&py_ch, &px).map_err(pyerr)?;
                let lec_y = blackwell::lecam_deficiency(&px, &py_ch).map_err(pyerr)?;
                let lec_x = blackwell::lecam_deficiency(&py_ch, &px).map_err(pyerr)?;
                serde_json::json!({
                    "x_sufficient_for_y": {"sufficient": xy.sufficient, "residual": xy.residual},
                    "y_sufficient_for_x": {"sufficient": yx.sufficient, "residual": yx.residual},
                    "lecam_emulate_y_from_x": lec_y.value,
                    "lecam_emulate_x_from_y": lec_x.value,
                })
            }
            ParsedInput::Gaussian(g) => {
                let rep = ipid::blackwellian_check_gaussian(g, &SolverConfig::default())
                    .map_err(pyerr)?;
                serde_json::json!({
                    "x_sufficient_for_y": {"sufficient": rep.x_sufficient},
                    "y_sufficient_for_x": {"sufficient": rep.y_sufficient},
                    "info_deficiency_x": rep.delta_x,
                    "info_deficiency_y": rep.delta_y,
                    "agreement": [rep.agree_x, rep.agree_y],
                })
            }
        };
        to_py(py, &value)
    }

    #[pyo3(signature = (losses=50, seed=42, verbose=false))]
    fn risk_audit(
        &self,
        py: Python<'_>,
        losses: usize,
        seed: u64,
        verbose: bool,
    ) -> PyResult<Py<PyAny>> {
        let d = self.discrete_ref()?;
        let mut rep =
            risk::risk_gap_audit(d, &SolverConfig::default(), losses, seed).map_err(pyerr)?;
        if !verbose {
            rep.rows.clear();
        }
        report(py, &rep)
    }

    /// Solve the relaxed deficiency over a strictly increasing grid; each
    /// row reports total, kl and conditional-MI parts in both units.
    #[pyo3(signature = (grid, direction="x"))]
    fn sweep(&self, py: Python<'_>, grid: Vec<f64>, direction: &str) -> PyResult<Py<PyAny>> {
        let d = self.discrete_ref()?;
        let dir = parse_direction(direction)?;
        let results =
            lambda::lambda_sweep(d, dir, &grid, &SolverConfig::default()).map_err(pyerr)?;
        let rows: Vec<serde_json::Value> = results
            .iter()
            .map(|r| {
                serde_json::json!({
                    "lambda": r.lambda,
                    "total": r.total,
                    "kl_part": r.kl_part,
                    "cmi_part": r.cmi_part,
                    "converged": r.converged,
                })
            })
            .collect();
        to_py(py, &serde_json::Value::Array(rows))
    }

    #[pyo3(signature = (direction="x"))]
    fn deficiency(&self, py: Python<'_>, direction: &str) -> PyResult<Py<PyAny>> {
        let d = self.discrete_ref()?;
        let dir = parse_direction(direction)?;
        let r = delta::deficiency(d, dir, &SolverConfig::default()).map_err(pyerr)?;
        report(
            py,
            &serde_json::json!({
                "value": r.value,
                "iterations": r.iterations,
                "converged": r.converged,
            }),
        )
    }
}

#[pyfunction]
fn xor() -> Distribution {
    Distribution { inner: ParsedInput::Discrete(corpus::xor()) }
}

#[pyfunction]
fn copy() -> Distribution {
    Distribution { inner: ParsedInput::Discrete(corpus::copy()) }
}

#[pyfunction]
fn and_gate() -> Distribution {
    Distribution { inner: ParsedInput::Discrete(corpus::and_gate()) }
}

#[pyfunction]
fn four_bit() -> Distribution {
    Distribution { inner: ParsedInput::Discrete(corpus::four_bit()) }
}

#[pyfunction]
fn gaussian_scalar(noise_x: f64, noise_y: f64) -> Distribution {
    Distribution { inner: ParsedInput::Gaussian(corpus::gaussian_scalar(noise_x, noise_y)) }
}

#[pymodule]
fn pidkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Distribution>()?;
    m.add_function(wrap_pyfunction!(xor, m)?)?;
    m.add_function(wrap_pyfunction!(copy, m)?)?;
    m.add_function(wrap_pyfunction!(and_gate, m)?)?;
    m.add_function(wrap_pyfunction!(four_bit, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_scalar, m)?)?;
    Ok(())
}
