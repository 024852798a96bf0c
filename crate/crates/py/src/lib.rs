//! Python bindings. Answers come back as plain dicts and lists, decoded from
//! the same canonical JSON the CLI and the HTTP service emit.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::{Map, Value};
use tracelens_core::synth::{generate, SynthConfig};
use tracelens_core::{
    catalog, render_dot, render_json, ApiId, ErrorBody, NodeId, Overlay, QueryError, QueryRequest,
};

create_exception!(
    tracelens,
    TraceLensError,
    PyException,
    "A query or load failure; args are (code, message)."
);

fn raise(body: ErrorBody) -> PyErr {
    TraceLensError::new_err((body.code, body.message))
}

fn query_err(e: QueryError) -> PyErr {
    raise(ErrorBody::from(&e))
}

fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Builds a request from keyword arguments: `source=1, sink=4,
/// sink_a=.., sanitize=[..], max_paths=..`. Unknown names are rejected by
/// the request parser.
fn request(kind: &str, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<QueryRequest> {
    let mut params = Map::new();
    let mut limits = Map::new();
    if let Some(kw) = kwargs {
        for (k, v) in kw.iter() {
            let key: String = k.extract()?;
            let value: Value = if let Ok(n) = v.extract::<u64>() {
                n.into()
            } else {
                v.extract::<Vec<u64>>()?.into()
            };
            match key.as_str() {
                "max_paths" => limits.insert("maxPaths".into(), value),
                "max_depth" => limits.insert("maxDepth".into(), value),
                other => params.insert(camel(other), value),
            };
        }
    }
    let body = serde_json::json!({ "type": kind, "params": params, "limits": limits });
    QueryRequest::from_json(&body.to_string()).map_err(query_err)
}

fn camel(snake: &str) -> String {
    let mut out = String::with_capacity(snake.len());
    let mut upper = false;
    for c in snake.chars() {
        if c == '_' {
            upper = true;
        } else if upper {
            out.extend(c.to_uppercase());
            upper = false;
        } else {
            out.push(c);
        }
    }
    out
}

/// An immutable fact base loaded from a fact directory.
#[pyclass(frozen, module = "tracelens")]
struct FactBase {
    inner: tracelens_core::FactBase,
}

#[pymethods]
impl FactBase {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        tracelens_core::load_facts(&path)
            .map(|inner| Self { inner })
            .map_err(|e| raise(ErrorBody::from(&e)))
    }

    /// A deterministic synthetic fact base at real-project scale.
    #[staticmethod]
    #[pyo3(signature = (seed=None))]
    fn synthetic(seed: Option<u64>) -> PyResult<Self> {
        let mut cfg = SynthConfig::reference_scale();
        if let Some(s) = seed {
            cfg.seed = s;
        }
        generate(&cfg)
            .map(|inner| Self { inner })
            .map_err(|e| raise(ErrorBody::from(&e)))
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_facts(&path).map_err(|e| {
            raise(ErrorBody {
                code: "io_error",
                message: e.to_string(),
            })
        })
    }

    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let health = loads(py, &catalog::health_json(&self.inner))?;
        health.get_item("factCounts")
    }

    fn sources<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, &catalog::sources_json(&self.inner))
    }

    fn sinks<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, &catalog::sinks_json(&self.inner))
    }

    fn apis<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, &catalog::apis_json(&self.inner))
    }

    fn find<'py>(&self, py: Python<'py>, label: &str) -> PyResult<Bound<'py, PyAny>> {
        loads(py, &catalog::find_json(&self.inner, label))
    }

    fn node<'py>(&self, py: Python<'py>, id: u64) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(n) = self.inner.node(NodeId(id)) else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        d.set_item("id", id)?;
        d.set_item("label", &n.label)?;
        d.set_item("file", &n.file)?;
        d.set_item("line", n.line)?;
        d.set_item("column", n.column)?;
        Ok(Some(d))
    }

    /// Runs a query template and returns the answer document as a dict.
    #[pyo3(signature = (kind, **params))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        kind: &str,
        params: Option<&Bound<'py, PyDict>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let text = self.query_json(py, kind, params)?;
        loads(py, &text)
    }

    /// Like `query`, but returns the canonical JSON text unchanged.
    #[pyo3(signature = (kind, **params))]
    fn query_json(
        &self,
        py: Python<'_>,
        kind: &str,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<String> {
        let req = request(kind, params)?;
        py.detach(|| render_json(&self.inner, &req))
            .map_err(query_err)
    }

    #[pyo3(signature = (kind, **params))]
    fn dot(
        &self,
        py: Python<'_>,
        kind: &str,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<String> {
        let req = request(kind, params)?;
        py.detach(|| render_dot(&self.inner, &req))
            .map_err(query_err)
    }

    /// Whether `src` reaches `dst` under the given what-if overlay.
    #[pyo3(signature = (src, dst, sanitize=Vec::new(), activate=Vec::new()))]
    fn reaches(
        &self,
        src: u64,
        dst: u64,
        sanitize: Vec<u64>,
        activate: Vec<u64>,
    ) -> PyResult<bool> {
        let overlay = Overlay {
            sanitized: sanitize.into_iter().map(ApiId).collect(),
            activated: activate.into_iter().map(ApiId).collect(),
        };
        tracelens_core::reaches(&self.inner, &overlay, NodeId(src), NodeId(dst)).map_err(query_err)
    }

    /// Every reachable node id from `src` under the overlay, ascending.
    #[pyo3(signature = (src, sanitize=Vec::new(), activate=Vec::new()))]
    fn reachable<'py>(
        &self,
        py: Python<'py>,
        src: u64,
        sanitize: Vec<u64>,
        activate: Vec<u64>,
    ) -> PyResult<Bound<'py, PyList>> {
        let overlay = Overlay {
            sanitized: sanitize.into_iter().map(ApiId).collect(),
            activated: activate.into_iter().map(ApiId).collect(),
        };
        let set =
            tracelens_core::reachable_set(&self.inner, &overlay, NodeId(src)).map_err(query_err)?;
        PyList::new(py, set.iter().map(|n| n.0))
    }

    fn __repr__(&self) -> String {
        let c = self.inner.counts();
        format!(
            "FactBase(nodes={}, edges={}, sources={}, sinks={}, apis={})",
            c.nodes, c.edges, c.sources, c.sinks, c.apis
        )
    }
}

#[pymodule]
fn tracelens(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FactBase>()?;
    m.add("TraceLensError", m.py().get_type::<TraceLensError>())?;
    m.add(
        "QUERY_KINDS",
        tracelens_core::QueryKind::ALL
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>(),
    )?;
    Ok(())
}
