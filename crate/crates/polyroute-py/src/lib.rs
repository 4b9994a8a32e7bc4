//! Python bindings for the routing engine: an `Engine` class plus the
//! embedding, corpus, and evaluation entry points. Structured results
//! cross the boundary as plain dicts/lists built from their JSON form.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};

use polyroute_core::config::EngineConfig;
use polyroute_core::corpus::{generate_corpus, generate_validation, Corpus};
use polyroute_core::couplet::AnnotationStore;
use polyroute_core::engine::Engine as CoreEngine;
use polyroute_core::eval::evaluate;
use polyroute_core::feedback::{FeedbackEvent, FeedbackKind, ReportedProblem};
use polyroute_core::model::{self, Attachment, PolicyMode, Query, UserPolicy};

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<PyObject> {
    Ok(match value {
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
                list.append(value_to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, value_to_py(py, v)?)?;
            }
            dict.unbind().into()
        }
    })
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let json = serde_json::to_value(value).map_err(runtime_err)?;
    value_to_py(py, &json)
}

fn parse_policy(mode: Option<&str>, budget: Option<f64>) -> PyResult<UserPolicy> {
    let mode = match mode.unwrap_or("auto") {
        "auto" => PolicyMode::Auto,
        "premium_allowed" => PolicyMode::PremiumAllowed,
        "open_source_only" | "open" => PolicyMode::OpenSourceOnly,
        other => return Err(PyValueError::new_err(format!("unknown policy mode `{other}`"))),
    };
    Ok(match budget {
        Some(b) => UserPolicy::new(mode, b, false).map_err(runtime_err)?,
        None => UserPolicy { mode, cost_budget: 0.0, unlimited: true },
    })
}

/// The routing engine. Holds the memory store, cost ledger, and decision
/// log across calls, so multi-turn sessions and follow-ups work.
#[pyclass]
struct Engine {
    inner: CoreEngine,
    counter: std::sync::atomic::AtomicU64,
}

#[pymethods]
impl Engine {
    /// Engine(config_json=None, seed=None, corpus_dir=None)
    #[new]
    #[pyo3(signature = (config_json=None, seed=None, corpus_dir=None))]
    fn new(config_json: Option<&str>, seed: Option<u64>, corpus_dir: Option<&str>) -> PyResult<Self> {
        let mut config = match config_json {
            Some(raw) => EngineConfig::from_json(raw).map_err(runtime_err)?,
            None => EngineConfig::bundled(),
        };
        if let Some(seed) = seed {
            config.run_seed = seed;
        }
        let annotations = match corpus_dir {
            Some(dir) => {
                let raw = std::fs::read_to_string(std::path::Path::new(dir).join("annotations.json"))
                    .map_err(runtime_err)?;
                serde_json::from_str::<AnnotationStore>(&raw).map_err(runtime_err)?
            }
            None => AnnotationStore::default(),
        };
        Ok(Self {
            inner: CoreEngine::new(config, annotations).map_err(runtime_err)?,
            counter: std::sync::atomic::AtomicU64::new(0),
        })
    }

    /// Routes and executes one query; returns the full response as a dict.
    /// Attachments are (filename, mime, bytes) tuples.
    #[pyo3(signature = (text=None, attachments=None, session=None, policy=None, budget=None, query_id=None, arrived_at=None))]
    #[allow(clippy::too_many_arguments)]
    fn handle(
        &self,
        py: Python<'_>,
        text: Option<&str>,
        attachments: Option<Vec<(String, String, Py<PyBytes>)>>,
        session: Option<&str>,
        policy: Option<&str>,
        budget: Option<f64>,
        query_id: Option<&str>,
        arrived_at: Option<u64>,
    ) -> PyResult<PyObject> {
        let n = self.counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        let id = query_id.map(str::to_string).unwrap_or_else(|| format!("py-{n}"));
        let mut attached = Vec::new();
        for (filename, mime, bytes) in attachments.unwrap_or_default() {
            attached.push(
                Attachment::new(filename, mime, bytes.as_bytes(py).to_vec())
                    .map_err(runtime_err)?,
            );
        }
        let query = Query::new(
            id.clone(),
            text.unwrap_or_default(),
            attached,
            session.map(str::to_string).unwrap_or_else(|| format!("sess-{id}")),
            parse_policy(policy, budget)?,
            arrived_at.unwrap_or((n + 1) * 1000),
        )
        .map_err(runtime_err)?;
        let response = self.inner.handle(&query).map_err(runtime_err)?;
        to_py(py, &response)
    }

    /// Feedback against an already-handled query id. `kind` is
    /// "unsatisfactory" or "routing_error"; routing errors need a
    /// `problem` of wrong_model, wrong_modality, or missing_context.
    #[pyo3(signature = (query_id, kind, problem=None))]
    fn feedback(
        &self,
        py: Python<'_>,
        query_id: &str,
        kind: &str,
        problem: Option<&str>,
    ) -> PyResult<PyObject> {
        let kind = match kind {
            "unsatisfactory" => FeedbackKind::Unsatisfactory,
            "routing_error" => FeedbackKind::RoutingError,
            other => return Err(PyValueError::new_err(format!("unknown feedback kind `{other}`"))),
        };
        let reported_problem = match problem {
            None => None,
            Some("wrong_model") => Some(ReportedProblem::WrongModel),
            Some("wrong_modality") => Some(ReportedProblem::WrongModality),
            Some("missing_context") => Some(ReportedProblem::MissingContext),
            Some(other) => {
                return Err(PyValueError::new_err(format!("unknown problem `{other}`")))
            }
        };
        let entry = self
            .inner
            .feedback(&FeedbackEvent {
                query_id: query_id.to_string(),
                kind,
                reported_problem,
                timestamp: 0,
            })
            .map_err(runtime_err)?;
        to_py(py, &entry)
    }

    /// Snapshot of the cost ledger as a dict.
    fn ledger(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner.pool().ledger_report())
    }

    /// The engine's run seed.
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.run_seed()
    }
}

/// Deterministic feature-hashed embedding of `text` as a list of floats.
#[pyfunction]
fn embed_text(text: &str) -> Vec<f64> {
    model::embed_text(text).components().to_vec()
}

/// Cosine similarity between two embeddings (or any two equal-length
/// vectors produced by `embed_text`).
#[pyfunction]
fn cosine(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    if a.len() != b.len() {
        return Err(PyValueError::new_err("vectors differ in length"));
    }
    let va = model::EmbeddingVector::from_raw(a);
    let vb = model::EmbeddingVector::from_raw(b);
    Ok(model::cosine(&va, &vb))
}

/// The bundled engine configuration as a JSON string.
#[pyfunction]
fn default_config_json() -> PyResult<String> {
    EngineConfig::bundled().to_json_pretty().map_err(runtime_err)
}

/// Writes the bundled corpus, fixtures, annotations, and validation set
/// under `path`.
#[pyfunction]
#[pyo3(signature = (path, seed=None))]
fn write_corpus(path: &str, seed: Option<u64>) -> PyResult<usize> {
    let seed = seed.unwrap_or(polyroute_core::corpus::BUNDLED_CORPUS_SEED);
    let corpus = generate_corpus(seed);
    let validation = generate_validation(seed);
    corpus
        .write_to_dir(std::path::Path::new(path), &validation)
        .map_err(runtime_err)?;
    Ok(corpus.records.len())
}

/// Evaluates a corpus directory and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (path, seed=None))]
fn evaluate_corpus(py: Python<'_>, path: &str, seed: Option<u64>) -> PyResult<PyObject> {
    let corpus = Corpus::read_from_dir(std::path::Path::new(path)).map_err(runtime_err)?;
    let config = EngineConfig::bundled();
    let seed = seed.unwrap_or(config.run_seed);
    let report = evaluate(&corpus, &config, seed).map_err(runtime_err)?;
    to_py(py, &report)
}

#[pymodule]
fn polyroute(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Engine>()?;
    m.add_function(wrap_pyfunction!(embed_text, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(default_config_json, m)?)?;
    m.add_function(wrap_pyfunction!(write_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_corpus, m)?)?;
    Ok(())
}
