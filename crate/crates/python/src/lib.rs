//! Python module `gasket_slices`.

use pyo3::exceptions::{PyOverflowError, PyRuntimeError, PyValueError};
use num_bigint::BigUint;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use gasket_slices::exactgeom::{make_slope, SlopeSpec};
use gasket_slices::exponents as ex;
use gasket_slices::matrixgen::{
    build_matrices_congruence, build_matrices_geometric, count_degenerate_words,
    find_primitive_word, validate_structure,
};
use gasket_slices::measures::WordMeasure;
use gasket_slices::pressure::{PressureTable, SpectrumConfig, SpectrumKind, SpectrumModel};
use gasket_slices::slicer;
use gasket_slices::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Validation(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        Error::Capacity { .. } => PyOverflowError::new_err(e.to_string()),
        Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (_, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(xs) => {
            let list = PyList::empty(py);
            for x in xs {
                list.append(json_to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn word_arg(word: Vec<u8>) -> PyResult<Vec<u8>> {
    if word.iter().any(|&b| b > 1) {
        return Err(PyValueError::new_err("word letters must be 0 or 1"));
    }
    Ok(word)
}

/// Right-angle slope p/q, reduced to lowest terms.
#[pyclass(name = "Slope", module = "gasket_slices", frozen, from_py_object)]
#[derive(Clone)]
struct PySlope(SlopeSpec);

#[pymethods]
impl PySlope {
    #[new]
    fn new(p: i64, q: i64) -> PyResult<Self> {
        make_slope(p, q).map(PySlope).map_err(err)
    }

    /// Slope whose gasket tangent is √3·m/n.
    #[staticmethod]
    fn from_gasket_tangent(m: i64, n: i64) -> PyResult<Self> {
        SlopeSpec::from_gasket_tangent(m, n).map(PySlope).map_err(err)
    }

    #[getter]
    fn p(&self) -> u64 {
        self.0.p()
    }

    #[getter]
    fn q(&self) -> u64 {
        self.0.q()
    }

    /// Matrix dimension p + q.
    #[getter]
    fn dim(&self) -> usize {
        self.0.m()
    }

    /// `(m, n)` with tan θ = √3·m/n in lowest terms.
    fn gasket_tangent(&self) -> (u64, u64) {
        self.0.gasket_tangent_reduced()
    }

    fn __repr__(&self) -> String {
        format!("Slope({}, {})", self.0.p(), self.0.q())
    }
}

/// The pair of transition matrices A0, A1 for one slope.
#[pyclass(name = "TransitionPair", module = "gasket_slices", frozen)]
struct PyTransitionPair(gasket_slices::matrixgen::TransitionPair);

#[pymethods]
impl PyTransitionPair {
    #[new]
    #[pyo3(signature = (p, q, builder = "congruence"))]
    fn new(p: i64, q: i64, builder: &str) -> PyResult<Self> {
        let s = make_slope(p, q).map_err(err)?;
        let tp = match builder {
            "congruence" => build_matrices_congruence(&s),
            "geometric" => build_matrices_geometric(&s),
            other => return Err(PyValueError::new_err(format!("unknown builder {other:?}"))),
        };
        tp.map(PyTransitionPair).map_err(err)
    }

    #[getter]
    fn slope(&self) -> PySlope {
        PySlope(self.0.slope.clone())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn a0(&self) -> Vec<Vec<u64>> {
        self.0.a0().rows()
    }

    #[getter]
    fn a1(&self) -> Vec<Vec<u64>> {
        self.0.a1().rows()
    }

    /// Exact product A_{w1}···A_{wn} as nested lists of ints.
    fn product(&self, word: Vec<u8>) -> PyResult<Vec<Vec<BigUint>>> {
        Ok(self.0.product(&word_arg(word)?))
    }

    /// Structural violations; empty when every check passes.
    fn validate(&self) -> Vec<String> {
        validate_structure(&self.0)
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    /// Shortest word with a strictly positive product.
    fn primitive_word(&self) -> PyResult<Vec<u8>> {
        find_primitive_word(&self.0).map(|c| c.word).map_err(err)
    }

    /// Number of length-n words whose product has a zero column.
    fn degenerate_count(&self, n: usize) -> PyResult<u64> {
        count_degenerate_words(&self.0, n).map(|d| d.count).map_err(err)
    }

    /// Perron vector p with (A0 + A1) p = 3p and entries summing to 1.
    fn perron_vector(&self) -> PyResult<Vec<f64>> {
        let wm = WordMeasure::new(&self.0).map_err(err)?;
        Ok(wm.perron().values().to_vec())
    }

    /// η([w]) = 3^-n · e·A_w·p.
    fn eta(&self, word: Vec<u8>) -> PyResult<f64> {
        let wm = WordMeasure::new(&self.0).map_err(err)?;
        wm.eta(&word_arg(word)?).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn __repr__(&self) -> String {
        format!("TransitionPair({}, {})", self.0.slope.p(), self.0.slope.q())
    }
}

fn estimate<'py>(
    py: Python<'py>,
    tp: &PyTransitionPair,
    alpha: bool,
    mode: &str,
    n: Option<usize>,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let tp = &tp.0;
    let est = py.detach(|| match mode {
        "exact" => {
            let n = n.unwrap_or(ex::DEFAULT_EXACT_DEPTH);
            Ok(if alpha { ex::alpha_exact(tp, n) } else { ex::beta_exact(tp, n) })
        }
        "mc" => {
            let n = n.unwrap_or(ex::DEFAULT_MC_LENGTH);
            Ok(if alpha {
                ex::alpha_monte_carlo(tp, n, trials, seed)
            } else {
                ex::beta_monte_carlo(tp, n, trials, seed)
            })
        }
        "extrapolated" => {
            let n = n.unwrap_or(24);
            let x = if alpha { ex::alpha_extrapolated(tp, n) } else { ex::beta_extrapolated(tp, n) };
            Err(x)
        }
        other => Ok(Err(Error::Validation(format!("unknown mode {other:?}")))),
    });
    match est {
        Ok(e) => json_to_py(py, &e.map_err(err)?.to_json(tp)),
        Err(x) => serialize(py, &x.map_err(err)?),
    }
}

/// Lebesgue-typical slice dimension. `mode` is "exact", "mc" or
/// "extrapolated".
#[pyfunction]
#[pyo3(signature = (tp, mode = "exact", n = None, trials = 200, seed = 0))]
fn alpha<'py>(
    py: Python<'py>,
    tp: &PyTransitionPair,
    mode: &str,
    n: Option<usize>,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    estimate(py, tp, true, mode, n, trials, seed)
}

/// Slice dimension typical for the natural measure.
#[pyfunction]
#[pyo3(signature = (tp, mode = "exact", n = None, trials = 200, seed = 0))]
fn beta<'py>(
    py: Python<'py>,
    tp: &PyTransitionPair,
    mode: &str,
    n: Option<usize>,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    estimate(py, tp, false, mode, n, trials, seed)
}

#[pyfunction]
#[pyo3(signature = (tp, n = 20))]
fn envelope<'py>(py: Python<'py>, tp: &PyTransitionPair, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let env = py.detach(|| ex::growth_envelope(&tp.0, n)).map_err(err)?;
    json_to_py(py, &env.to_json(&tp.0))
}

/// Finite-depth pressure P_n(t) for each t.
#[pyfunction]
#[pyo3(signature = (tp, ts, n = 16))]
fn pressure(py: Python<'_>, tp: &PyTransitionPair, ts: Vec<f64>, n: usize) -> PyResult<Vec<f64>> {
    let table = py.detach(|| PressureTable::build(&tp.0, n)).map_err(err)?;
    Ok(ts.iter().map(|&t| table.pressure(t)).collect())
}

/// Extrapolated pressure with its Legendre transforms.
#[pyclass(name = "SpectrumModel", module = "gasket_slices", frozen)]
struct PySpectrumModel(SpectrumModel);

fn kind(name: &str) -> PyResult<SpectrumKind> {
    name.parse().map_err(err)
}

#[pymethods]
impl PySpectrumModel {
    #[new]
    #[pyo3(signature = (tp, n = 24, t_max = 40.0))]
    fn new(py: Python<'_>, tp: &PyTransitionPair, n: usize, t_max: f64) -> PyResult<Self> {
        let config = SpectrumConfig {
            n,
            t_max,
            ..SpectrumConfig::default()
        };
        py.detach(|| SpectrumModel::new(&tp.0, config))
            .map(PySpectrumModel)
            .map_err(err)
    }

    #[getter]
    fn alpha_est(&self) -> f64 {
        self.0.alpha_est()
    }

    #[getter]
    fn beta_est(&self) -> f64 {
        self.0.beta_est()
    }

    #[getter]
    fn b_min_est(&self) -> f64 {
        self.0.b_min_est()
    }

    #[getter]
    fn b_max_est(&self) -> f64 {
        self.0.b_max_est()
    }

    fn pressure(&self, t: f64) -> f64 {
        self.0.pressure(t)
    }

    /// P'(t) for t > 0.
    fn derivative(&self, t: f64) -> PyResult<f64> {
        self.0.derivative(t).map_err(err)
    }

    /// Value of the spectrum `kind` ("gamma", "chi", "box", "localdim") at x.
    fn evaluate<'py>(&self, py: Python<'py>, kind_name: &str, x: f64) -> PyResult<Bound<'py, PyAny>> {
        let v = self.0.evaluate(kind(kind_name)?, x).map_err(err)?;
        serialize(py, &v)
    }

    /// `(arguments, values)` on an evenly spaced grid across the domain.
    #[pyo3(signature = (kind_name, points = 50))]
    fn curve(&self, py: Python<'_>, kind_name: &str, points: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let k = kind(kind_name)?;
        let c = py
            .detach(|| self.0.curve(k, &self.0.default_grid(k, points)))
            .map_err(err)?;
        Ok(c.points.iter().map(|p| (p.argument, p.result.value)).unzip())
    }
}

fn point(tp: &PyTransitionPair, a: &str) -> PyResult<slicer::DyadicPointRef> {
    let a = slicer::parse_rational(a).map_err(err)?;
    Ok(slicer::expand_point(&tp.0.slope, &a).map_err(err)?.canonical)
}

/// Number of level-n cells meeting the slice at offset `a` ("u/v" or decimal).
#[pyfunction]
#[pyo3(signature = (tp, a, n, method = "matrix"))]
fn good_set_count(
    py: Python<'_>,
    tp: &PyTransitionPair,
    a: &str,
    n: usize,
    method: &str,
) -> PyResult<Option<BigUint>> {
    let c = match method {
        "matrix" => {
            let pt = point(tp, a)?;
            py.detach(|| slicer::good_set_count_matrix(&tp.0, &pt, n))
        }
        "geometric" => {
            let a = slicer::parse_rational(a).map_err(err)?;
            py.detach(|| slicer::good_set_count_geometric(&tp.0.slope, &a, n))
        }
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    Ok(c.map_err(err)?.count)
}

/// Matrix-product column j for `word`, counted by interval dynamics.
#[pyfunction]
fn interval_dynamics_count(slope: &PySlope, j: usize, word: Vec<u8>) -> PyResult<Vec<u64>> {
    slicer::interval_dynamics_count(&slope.0, j, &word_arg(word)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (tp, a, n = 32))]
fn conservation<'py>(py: Python<'py>, tp: &PyTransitionPair, a: &str, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let pt = point(tp, a)?;
    let wm = WordMeasure::new(&tp.0).map_err(err)?;
    let r = slicer::conservation_check(&wm, &pt, n).map_err(err)?;
    let d = serialize(py, &r)?;
    d.set_item("within_envelope", r.within_envelope())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (tp, a, ns = vec![8, 16, 32, 64]))]
fn slice_report<'py>(py: Python<'py>, tp: &PyTransitionPair, a: &str, ns: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    let a = slicer::parse_rational(a).map_err(err)?;
    let wm = WordMeasure::new(&tp.0).map_err(err)?;
    let r = slicer::slice_report(&wm, &a, &ns).map_err(err)?;
    serialize(py, &r)
}

/// Runs the invariant suite; returns `(name, passed, detail)` triples.
#[pyfunction]
fn selftest(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(gasket_slices::selftest::run_selftest)
        .checks
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pyfunction]
fn gasket_dimension() -> f64 {
    ex::gasket_dimension()
}

#[pymodule(name = "gasket_slices")]
fn gasket_slices_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySlope>()?;
    m.add_class::<PyTransitionPair>()?;
    m.add_class::<PySpectrumModel>()?;
    m.add_function(wrap_pyfunction!(alpha, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(envelope, m)?)?;
    m.add_function(wrap_pyfunction!(pressure, m)?)?;
    m.add_function(wrap_pyfunction!(good_set_count, m)?)?;
    m.add_function(wrap_pyfunction!(interval_dynamics_count, m)?)?;
    m.add_function(wrap_pyfunction!(conservation, m)?)?;
    m.add_function(wrap_pyfunction!(slice_report, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add_function(wrap_pyfunction!(gasket_dimension, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
