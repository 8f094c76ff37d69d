//! Python bindings. Structured results come back as plain dicts and lists.

use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use gln_kloosterman::bruhat::{self as br, SpecialWeyl};
use gln_kloosterman::exactalg::{fmt_rat, parse_rat, ExactMatrix};
use gln_kloosterman::ffchar as ff;
use gln_kloosterman::groups;
use gln_kloosterman::kloosterman as kl;
use gln_kloosterman::latcount as lc;
use gln_kloosterman::{Budget, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ResourceExceeded { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Integrity(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Serialize through JSON so Python receives builtin containers.
fn to_object<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let json = py.import_bound("json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

fn budget(b: Option<u128>) -> Budget {
    b.map(Budget).unwrap_or_default()
}

fn matrix_from_strings(rows: Vec<Vec<String>>) -> PyResult<ExactMatrix> {
    let parsed = rows
        .iter()
        .map(|r| r.iter().map(|x| parse_rat(x)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    ExactMatrix::from_rows(parsed).map_err(to_py)
}

fn matrix_strings(m: &ExactMatrix) -> Vec<Vec<String>> {
    m.rows().iter().map(|r| r.iter().map(fmt_rat).collect()).collect()
}

/// A signed permutation matrix with `w[i][w(i)] = ±1`.
#[pyclass(module = "glnk", frozen)]
#[derive(Clone)]
struct WeylElement {
    inner: br::WeylElement,
}

#[pymethods]
impl WeylElement {
    /// `name` is one of id, wstar, wl, w1.
    #[staticmethod]
    fn special(n: usize, name: &str) -> PyResult<Self> {
        let which = SpecialWeyl::parse(name).map_err(to_py)?;
        Ok(WeylElement { inner: br::WeylElement::special(n, which).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_block_type(blocks: Vec<usize>) -> PyResult<Self> {
        Ok(WeylElement { inner: br::WeylElement::from_block_type(&blocks).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_perm(perm: Vec<usize>) -> PyResult<Self> {
        Ok(WeylElement { inner: br::WeylElement::from_perm(perm).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn perm(&self) -> Vec<usize> {
        self.inner.perm().to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    fn block_type(&self) -> Option<Vec<usize>> {
        self.inner.block_type()
    }

    fn matrix(&self) -> Vec<Vec<String>> {
        matrix_strings(&self.inner.matrix())
    }

    fn u_w_pattern(&self) -> Vec<(usize, usize)> {
        br::u_w_pattern(&self.inner).into_iter().collect()
    }

    fn __repr__(&self) -> String {
        format!("WeylElement({})", self.inner.name())
    }
}

/// Parameters `(q, w, M, N, v, c)` of one Kloosterman sum.
#[pyclass(module = "glnk", frozen)]
struct KloostermanQuery {
    inner: kl::KloostermanQuery,
}

#[pymethods]
impl KloostermanQuery {
    #[new]
    #[pyo3(signature = (q, w, c, m=None, nv=None, v=None))]
    fn new(q: u64, w: &WeylElement, c: Vec<u64>, m: Option<Vec<i64>>, nv: Option<Vec<i64>>, v: Option<Vec<i8>>) -> PyResult<Self> {
        let n = w.inner.n();
        let inner = kl::KloostermanQuery::new(
            q,
            w.inner.clone(),
            m.unwrap_or_else(|| vec![1; n - 1]),
            nv.unwrap_or_else(|| vec![1; n - 1]),
            v.unwrap_or_else(|| vec![1; n]),
            c,
        )
        .map_err(to_py)?;
        Ok(KloostermanQuery { inner })
    }

    fn is_compatible(&self) -> bool {
        self.inner.is_compatible()
    }

    /// Sum with its set size, flags and a decimal evaluation.
    #[pyo3(signature = (backend="exact", height=None, precision=30, budget=None))]
    fn sum(&self, py: Python<'_>, backend: &str, height: Option<u64>, precision: u32, budget: Option<u128>) -> PyResult<PyObject> {
        let method = kl::Method::parse(backend, height).map_err(to_py)?;
        let s = py.allow_threads(|| kl::kloosterman_sum(&self.inner, method, self::budget(budget))).map_err(to_py)?;
        let out = to_object(py, &s)?;
        let d = out.downcast_bound::<PyDict>(py)?;
        d.set_item("value", to_object(py, &s.value.eval(precision))?)?;
        d.set_item("exact_integer", s.value.exact_integer().map(|v| v.to_string()))?;
        Ok(out)
    }

    /// Representatives `(x̂, ŷ, phase)` of the Kloosterman set.
    #[pyo3(signature = (backend="exact", height=None, budget=None))]
    fn enumerate(&self, py: Python<'_>, backend: &str, height: Option<u64>, budget: Option<u128>) -> PyResult<PyObject> {
        let method = kl::Method::parse(backend, height).map_err(to_py)?;
        let set = py.allow_threads(|| kl::enumerate(&self.inner, method, self::budget(budget))).map_err(to_py)?;
        to_object(py, &set)
    }

    fn divisibility(&self, py: Python<'_>) -> PyResult<PyObject> {
        let q = &self.inner;
        to_object(py, &kl::divisibility_check(q.n, q.q, &q.w, &q.c).map_err(to_py)?)
    }

    fn __repr__(&self) -> String {
        let q = &self.inner;
        format!("KloostermanQuery(q={}, w={}, c={:?}, M={:?}, N={:?}, v={:?})", q.q, q.w.name(), q.c, q.m, q.nv, q.v)
    }
}

#[pyfunction]
fn bruhat_decompose(py: Python<'_>, rows: Vec<Vec<String>>) -> PyResult<PyObject> {
    let g = matrix_from_strings(rows)?;
    let data = br::bruhat_decompose(&g).map_err(to_py)?;
    let (xh, yh) = data.canonical();
    let out = to_object(py, &data)?;
    let d = out.downcast_bound::<PyDict>(py)?;
    d.set_item("x_hat", matrix_strings(&xh))?;
    d.set_item("y_hat", matrix_strings(&yh))?;
    Ok(out)
}

#[pyfunction]
fn index_sl(n: usize, q: u64) -> String {
    groups::index_sl(n, q).to_string()
}

#[pyfunction]
fn unipotent_index(n: usize, q: u64) -> String {
    groups::unipotent_index(n, q).to_string()
}

#[pyfunction]
fn wstar_support_check(py: Python<'_>, n: usize, q: u64, c: Vec<u64>) -> PyResult<PyObject> {
    to_object(py, &kl::wstar_support_check(n, q, &c).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (n, p, alpha, beta, budget=None))]
fn cab_count_and_bound(py: Python<'_>, n: usize, p: u64, alpha: u32, beta: u32, budget: Option<u128>) -> PyResult<PyObject> {
    let r = py.allow_threads(|| kl::cab_count_and_bound(n, p, alpha, beta, self::budget(budget))).map_err(to_py)?;
    to_object(py, &r)
}

#[pyfunction]
fn cuspidal_dim(n: usize, p: u64) -> PyResult<String> {
    Ok(ff::cuspidal_dim(n, p).map_err(to_py)?.to_string())
}

#[pyfunction]
#[pyo3(signature = (n, p, budget=None))]
fn cuspidal_unipotent_char(py: Python<'_>, n: usize, p: u64, budget: Option<u128>) -> PyResult<PyObject> {
    let c = py.allow_threads(|| ff::cuspidal_unipotent_char(n, p, self::budget(budget))).map_err(to_py)?;
    to_object(py, &c)
}

/// `values` maps Jordan types (tuples) to integers.
#[pyfunction]
#[pyo3(signature = (n, p, values, twist=None, budget=None))]
fn gg_sum(
    py: Python<'_>,
    n: usize,
    p: u64,
    values: std::collections::BTreeMap<Vec<usize>, i64>,
    twist: Option<Vec<u64>>,
    budget: Option<u128>,
) -> PyResult<PyObject> {
    let values = values
        .into_iter()
        .map(|(mut k, v)| {
            k.sort_unstable_by(|a, b| b.cmp(a));
            (k, v)
        })
        .collect();
    let chi = ff::UnipotentClassFunction::new(n, p, values).map_err(to_py)?;
    let twist = twist.unwrap_or_else(|| vec![1; n.saturating_sub(1)]);
    let r = ff::gg_sum_twisted(&chi, &twist, self::budget(budget)).map_err(to_py)?;
    to_object(py, &r)
}

#[pyfunction]
fn unipotent_jordan_type(u: Vec<Vec<u64>>, p: u64) -> PyResult<Vec<usize>> {
    ff::unipotent_jordan_type(&u, p).map_err(to_py)
}

#[pyfunction]
fn parabolic_dim_count(py: Python<'_>, n: usize, parts: Vec<usize>, p: u64, dims: Vec<u64>) -> PyResult<PyObject> {
    to_object(py, &ff::parabolic_dim_count(n, &parts, p, &dims).map_err(to_py)?)
}

/// Degrees, class sizes and the cuspidal characters of `GL_n(F_p)`.
#[pyfunction]
#[pyo3(signature = (n, p, budget=None))]
fn character_table_summary(py: Python<'_>, n: usize, p: u64, budget: Option<u128>) -> PyResult<PyObject> {
    let b = self::budget(budget);
    let t = py.allow_threads(|| ff::character_table_oracle(n, p, b)).map_err(to_py)?;
    let cusp = ff::cuspidal_indices(&t, b).map_err(to_py)?;
    let d = PyDict::new_bound(py);
    d.set_item("order", t.group_order)?;
    d.set_item("degrees", t.degrees().iter().map(|x| *x as i64).collect::<Vec<_>>())?;
    d.set_item("class_sizes", t.classes.iter().map(|c| c.size).collect::<Vec<_>>())?;
    d.set_item("cuspidal", cusp)?;
    d.set_item("orthogonality", t.orthogonality_holds())?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
#[pyo3(signature = (n, q, t, budget=None))]
fn count_ball(py: Python<'_>, n: usize, q: u64, t: u64, budget: Option<u128>) -> PyResult<PyObject> {
    let r = py.allow_threads(|| lc::count_ball(n, q, t, self::budget(budget))).map_err(to_py)?;
    to_object(py, &r)
}

#[pyfunction]
fn smallest_lift(gbar: Vec<Vec<i64>>, q: u64) -> PyResult<(Vec<Vec<String>>, u64)> {
    let (m, norm) = lc::smallest_lift(&gbar, q).map_err(to_py)?;
    Ok((matrix_strings(&m), norm))
}

#[pyfunction]
#[pyo3(signature = (n, q, epsilon=0.2, seed=0x5eed, budget=None))]
fn lifting_census(py: Python<'_>, n: usize, q: u64, epsilon: f64, seed: u64, budget: Option<u128>) -> PyResult<PyObject> {
    let cfg = lc::CensusConfig { epsilon, seed, ..Default::default() };
    let r = py.allow_threads(|| lc::lifting_census(n, q, cfg, self::budget(budget))).map_err(to_py)?;
    let d = PyDict::new_bound(py);
    d.set_item("total", r.total)?;
    d.set_item("examined", r.examined)?;
    d.set_item("threshold", r.threshold)?;
    d.set_item("max_norm", r.max_norm)?;
    d.set_item("failure_count", r.failure_count)?;
    d.set_item("failure_fraction", r.failure_fraction())?;
    Ok(d.into_any().unbind())
}

#[pymodule]
fn glnk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<WeylElement>()?;
    m.add_class::<KloostermanQuery>()?;
    m.add_function(wrap_pyfunction!(bruhat_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(index_sl, m)?)?;
    m.add_function(wrap_pyfunction!(unipotent_index, m)?)?;
    m.add_function(wrap_pyfunction!(wstar_support_check, m)?)?;
    m.add_function(wrap_pyfunction!(cab_count_and_bound, m)?)?;
    m.add_function(wrap_pyfunction!(cuspidal_dim, m)?)?;
    m.add_function(wrap_pyfunction!(cuspidal_unipotent_char, m)?)?;
    m.add_function(wrap_pyfunction!(gg_sum, m)?)?;
    m.add_function(wrap_pyfunction!(unipotent_jordan_type, m)?)?;
    m.add_function(wrap_pyfunction!(parabolic_dim_count, m)?)?;
    m.add_function(wrap_pyfunction!(character_table_summary, m)?)?;
    m.add_function(wrap_pyfunction!(count_ball, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_lift, m)?)?;
    m.add_function(wrap_pyfunction!(lifting_census, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
