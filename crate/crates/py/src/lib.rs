//! Python bindings for `hkas_core`.
//!
//! Structured results (check reports, graph analyses, validation summaries)
//! come back as plain dicts decoded from the same JSON the CLI prints.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::Value as Json;

use hkas_core::check::{check, CheckKind};
use hkas_core::graph::shapes;
use hkas_core::harness::{standard_corpus, validate_corpus};
use hkas_core::scheme::{load_scheme_file, Scheme as CoreScheme};
use hkas_core::{gen, parse_entropy_expr, AccessGraph as CoreGraph, ClassId, ClassSequence};

create_exception!(hkas, HkasError, PyValueError);

fn err(e: impl std::fmt::Display) -> PyErr {
    HkasError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, doc: &Json) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (doc.to_string(),))
}

fn labels(items: impl IntoIterator<Item = ClassId>) -> Vec<String> {
    items.into_iter().map(|c| c.as_str().to_string()).collect()
}

#[pyclass(name = "AccessGraph", module = "hkas", frozen)]
struct PyAccessGraph {
    inner: CoreGraph,
}

impl PyAccessGraph {
    fn class(&self, label: &str) -> PyResult<ClassId> {
        self.inner.class(label).cloned().map_err(err)
    }

    fn sequence(&self, items: Vec<String>) -> PyResult<ClassSequence> {
        Ok(ClassSequence(items.iter().map(|l| self.class(l)).collect::<PyResult<_>>()?))
    }
}

#[pymethods]
impl PyAccessGraph {
    /// `edges` are `(from, to)` pairs: `from` can derive the key of `to`.
    #[new]
    #[pyo3(signature = (classes, edges=Vec::new()))]
    fn new(classes: Vec<String>, edges: Vec<(String, String)>) -> PyResult<Self> {
        let cs: Vec<&str> = classes.iter().map(String::as_str).collect();
        let es: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Ok(Self { inner: CoreGraph::from_labels(&cs, &es).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreGraph::from_json_str(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[staticmethod]
    fn chain(n: usize) -> Self {
        Self { inner: shapes::chain(n) }
    }

    #[staticmethod]
    fn diamond() -> Self {
        Self { inner: shapes::diamond() }
    }

    #[staticmethod]
    fn binary_tree(n: usize) -> Self {
        Self { inner: shapes::binary_tree(n) }
    }

    #[staticmethod]
    fn antichain(n: usize) -> Self {
        Self { inner: shapes::antichain(n) }
    }

    #[staticmethod]
    fn random_dag(n: usize, seed: u64) -> Self {
        Self { inner: shapes::random_dag(n, seed) }
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        labels(self.inner.classes().iter().cloned())
    }

    #[getter]
    fn edges(&self) -> Vec<(String, String)> {
        self.inner.edges().iter().map(|(a, b)| (a.as_str().to_string(), b.as_str().to_string())).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("AccessGraph(classes={:?}, edges={:?})", self.classes(), self.edges())
    }

    fn can_access(&self, v: &str, u: &str) -> PyResult<bool> {
        self.inner.can_access(&self.class(v)?, &self.class(u)?).map_err(err)
    }

    fn accessible_set(&self, v: &str) -> PyResult<Vec<String>> {
        Ok(labels(self.inner.accessible_set(&self.class(v)?).map_err(err)?))
    }

    fn forbidden_set(&self, u: &str) -> PyResult<Vec<String>> {
        Ok(labels(self.inner.forbidden_set(&self.class(u)?).map_err(err)?))
    }

    fn ancestor_set(&self, u: &str) -> PyResult<Vec<String>> {
        Ok(labels(self.inner.ancestor_set(&self.class(u)?).map_err(err)?))
    }

    fn partition_check(&self, u: &str) -> PyResult<bool> {
        self.inner.partition_check(&self.class(u)?).map_err(err)
    }

    fn topological_sort(&self) -> Vec<String> {
        labels(self.inner.topological_sort().0)
    }

    fn well_ordered_all(&self) -> Vec<String> {
        labels(self.inner.well_ordered_all().0)
    }

    fn theorem_sequence(&self, u: &str) -> PyResult<Vec<String>> {
        Ok(labels(self.inner.theorem_sequence(&self.class(u)?).map_err(err)?.0))
    }

    fn is_well_ordered(&self, seq: Vec<String>) -> PyResult<bool> {
        self.inner.is_well_ordered(&self.sequence(seq)?).map_err(err)
    }
}

#[pyclass(name = "Scheme", module = "hkas", frozen)]
struct PyScheme {
    inner: CoreScheme,
}

#[pymethods]
impl PyScheme {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: load_scheme_file(&path).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: Json = serde_json::from_str(text).map_err(err)?;
        Ok(Self { inner: CoreScheme::from_json(&doc, None).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn graph(&self) -> PyAccessGraph {
        PyAccessGraph { inner: self.inner.graph().clone() }
    }

    #[getter]
    fn support_size(&self) -> usize {
        self.inner.dist().support_size()
    }

    /// Evaluates an expression such as `"H(K:a|S:b,S:c)"` or `"I(K:a;K:r)"`.
    fn entropy(&self, expr: &str) -> PyResult<f64> {
        parse_entropy_expr(expr).map_err(err)?.evaluate(&self.inner).map_err(err)
    }

    /// One of `correctness`, `ki`, `ski`, `key-indep`; returns the report dict.
    #[pyo3(signature = (kind, exhaustive=false))]
    fn check<'py>(&self, py: Python<'py>, kind: &str, exhaustive: bool) -> PyResult<Bound<'py, PyAny>> {
        let kind = CheckKind::parse(kind).ok_or_else(|| err(format!("unknown check kind {kind:?}")))?;
        let report = check(&self.inner, kind, exhaustive).map_err(err)?;
        to_py(py, &report.to_json())
    }

    /// Runs all four checks and returns `True` when every one passes.
    #[pyo3(signature = (exhaustive=false))]
    fn is_secure(&self, exhaustive: bool) -> PyResult<bool> {
        let reports = hkas_core::check::check_all(&self.inner, exhaustive).map_err(err)?;
        Ok(reports.iter().all(|r| r.passed))
    }

    fn __repr__(&self) -> String {
        format!("Scheme(classes={:?}, support_size={})", self.graph().classes(), self.support_size())
    }
}

fn wrap(r: Result<CoreScheme, gen::GenError>) -> PyResult<PyScheme> {
    Ok(PyScheme { inner: r.map_err(err)? })
}

#[pyfunction]
fn gen_trivial(graph: &PyAccessGraph, q: u64) -> PyResult<PyScheme> {
    wrap(gen::gen_trivial(&graph.inner, q))
}

#[pyfunction]
fn gen_leaky(graph: &PyAccessGraph, q: u64, target: &str, leaker: &str) -> PyResult<PyScheme> {
    wrap(gen::gen_leaky(&graph.inner, q, &graph.class(target)?, &graph.class(leaker)?))
}

#[pyfunction]
fn gen_correlated(graph: &PyAccessGraph, q: u64, u: &str, w: &str) -> PyResult<PyScheme> {
    wrap(gen::gen_correlated(&graph.inner, q, &graph.class(u)?, &graph.class(w)?))
}

#[pyfunction]
fn gen_random_correct(graph: &PyAccessGraph, q: u64, seed: u64) -> PyResult<PyScheme> {
    wrap(gen::gen_random_correct(&graph.inner, q, seed))
}

/// Builds the standard corpus on `graph` and replays the identities on it.
#[pyfunction]
#[pyo3(signature = (graph, q=2, trials=20, seed=0))]
fn validate<'py>(py: Python<'py>, graph: &PyAccessGraph, q: u64, trials: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let corpus = standard_corpus(&graph.inner, q, trials, seed).map_err(err)?;
    let summary = validate_corpus(&corpus).map_err(err)?;
    to_py(py, &summary.to_json())
}

#[pymodule]
pub fn hkas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HkasError", m.py().get_type::<HkasError>())?;
    m.add_class::<PyAccessGraph>()?;
    m.add_class::<PyScheme>()?;
    m.add_function(wrap_pyfunction!(gen_trivial, m)?)?;
    m.add_function(wrap_pyfunction!(gen_leaky, m)?)?;
    m.add_function(wrap_pyfunction!(gen_correlated, m)?)?;
    m.add_function(wrap_pyfunction!(gen_random_correct, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
