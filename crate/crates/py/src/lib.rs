//! Python bindings: model loading, property parsing, model checking,
//! vacuity, coverage and replayed pipeline runs.
//!
//! Results that carry nested data (verdicts, vacuity and coverage
//! reports, run reports) are returned as plain Python dicts.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyList;
use serde::Serialize as _;

use vacfv::coverage::{coverage_report, CompositeRule};
use vacfv::formula::{parse_property, parse_property_file, Property as CoreProperty};
use vacfv::mc::{check_with, CheckOptions};
use vacfv::model::{load_model, load_model_str, LoadOptions, Model as CoreModel};
use vacfv::pipeline::provider::ReplayProvider;
use vacfv::pipeline::retrieval::{Corpus, DEFAULT_OVERLAP, DEFAULT_WINDOW};
use vacfv::pipeline::spec::ingest_spec_file;
use vacfv::pipeline::{run_pipeline as core_run_pipeline, PipelineConfig};
use vacfv::vacuity::{check_vacuity_with, VacuityMode};

fn err(e: impl std::error::Error) -> PyErr {
    let mut msg = e.to_string();
    let mut src = e.source();
    while let Some(s) = src {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        src = s.source();
    }
    PyValueError::new_err(msg)
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A transition system loaded from JSON.
#[pyclass(name = "Model", module = "vacfv_py")]
struct Model {
    inner: CoreModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (path, complete_selfloop = false))]
    fn load(path: PathBuf, complete_selfloop: bool) -> PyResult<Model> {
        let opts = LoadOptions { complete_selfloop, ..Default::default() };
        Ok(Model { inner: load_model(path, &opts).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, complete_selfloop = false))]
    fn from_json(text: &str, complete_selfloop: bool) -> PyResult<Model> {
        let opts = LoadOptions { complete_selfloop, ..Default::default() };
        Ok(Model { inner: load_model_str(text, &opts).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.vars.iter().map(|v| v.name.clone()).collect()
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    fn reachable_states(&self) -> usize {
        self.inner.reachable_states().len()
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, states={}, vars={})", self.inner.name, self.inner.num_states(), self.inner.vars.len())
    }
}

/// A named property, optionally clocked and with a `disable iff` condition.
#[pyclass(name = "Property", module = "vacfv_py", skip_from_py_object)]
#[derive(Clone)]
struct Property {
    inner: CoreProperty,
}

#[pymethods]
impl Property {
    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn formula(&self) -> String {
        self.inner.formula.to_string()
    }

    #[getter]
    fn disable(&self) -> Option<String> {
        self.inner.disable.as_ref().map(|d| d.to_string())
    }

    fn nnf(&self) -> String {
        self.inner.formula.nnf().to_string()
    }

    fn to_sva(&self) -> String {
        self.inner.to_sva().text
    }

    fn __repr__(&self) -> String {
        format!("Property({:?}, {:?})", self.inner.name, self.inner.formula.to_string())
    }
}

/// Parses a property file (`name: formula` lines or SVA blocks).
#[pyfunction]
fn parse_properties(text: &str) -> PyResult<Vec<Property>> {
    Ok(parse_property_file(text).map_err(err)?.into_iter().map(|inner| Property { inner }).collect())
}

/// Parses a bare formula and returns it in canonical form.
#[pyfunction]
fn parse(text: &str) -> PyResult<String> {
    Ok(parse_property(text).map_err(err)?.to_string())
}

/// Accepts a `Property`, a property-file string, a bare formula, or a list
/// of any of these.
fn properties(obj: &Bound<'_, PyAny>) -> PyResult<Vec<CoreProperty>> {
    if let Ok(p) = obj.cast::<Property>() {
        return Ok(vec![p.borrow().inner.clone()]);
    }
    if let Ok(list) = obj.cast::<PyList>() {
        let mut out = Vec::new();
        for item in list.iter() {
            out.extend(properties(&item)?);
        }
        return Ok(out);
    }
    let text: String = obj.extract()?;
    match parse_property_file(&text) {
        Ok(ps) if !ps.is_empty() => Ok(ps),
        _ => Ok(vec![CoreProperty::new("property", parse_property(&text).map_err(err)?)]),
    }
}

fn options(p: &CoreProperty) -> CheckOptions {
    CheckOptions { assume: p.assumption(), ..Default::default() }
}

/// Model-checks each property. Returns one dict per property with `name`,
/// `holds` and `counterexample`.
#[pyfunction]
fn check<'py>(py: Python<'py>, model: PyRef<'_, Model>, props: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let mut out = Vec::new();
    for p in properties(props)? {
        let v = check_with(&model.inner, &p.formula, &options(&p)).map_err(err)?;
        out.push(serde_json::json!({ "name": p.name, "holds": v.holds, "counterexample": v.counterexample }));
    }
    to_py(py, &out)
}

/// Vacuity report per property. `mode` is `single`, `all-occurrences` or
/// `exhaustive`.
#[pyfunction]
#[pyo3(signature = (model, props, mode = "all-occurrences"))]
fn vacuity<'py>(
    py: Python<'py>,
    model: PyRef<'_, Model>,
    props: &Bound<'py, PyAny>,
    mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let mode: VacuityMode = mode.parse().map_err(PyValueError::new_err)?;
    let mut out = Vec::new();
    for p in properties(props)? {
        let r = check_vacuity_with(&model.inner, &p.formula, mode, &options(&p)).map_err(err)?;
        out.push(serde_json::json!({ "name": p.name, "non_vacuous": r.is_non_vacuous(), "report": r }));
    }
    to_py(py, &out)
}

/// Coverage of a set of proven properties. `rule` is `product`, `min` or
/// `harmonic`.
#[pyfunction]
#[pyo3(signature = (model, props, rule = "product"))]
fn coverage<'py>(
    py: Python<'py>,
    model: PyRef<'_, Model>,
    props: &Bound<'py, PyAny>,
    rule: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let rule: CompositeRule = rule.parse().map_err(PyValueError::new_err)?;
    let r = coverage_report(&model.inner, &properties(props)?, rule).map_err(err)?;
    to_py(py, &r)
}

/// Runs the pipeline against a recorded transcript. Returns the run report
/// as a dict with an added `exit_code` entry.
#[pyfunction]
#[pyo3(signature = (model, spec, transcript, docs = None, threshold = 80.0, max_iter = 5, timestamp = None))]
#[allow(clippy::too_many_arguments)]
fn run_pipeline<'py>(
    py: Python<'py>,
    model: PyRef<'_, Model>,
    spec: PathBuf,
    transcript: PathBuf,
    docs: Option<PathBuf>,
    threshold: f64,
    max_iter: usize,
    timestamp: Option<String>,
) -> PyResult<Bound<'py, PyAny>> {
    if !(0.0..=100.0).contains(&threshold) {
        return Err(PyValueError::new_err(format!("threshold {threshold} is outside [0, 100]")));
    }
    let spec = ingest_spec_file(spec, false).map_err(err)?;
    let corpus = match docs {
        Some(d) => Corpus::from_dir(d, DEFAULT_WINDOW, DEFAULT_OVERLAP).map_err(err)?,
        None => Corpus::default(),
    };
    let mut provider = ReplayProvider::from_file(transcript).map_err(err)?;
    let cfg = PipelineConfig { threshold, max_iter, timestamp, ..Default::default() };
    let report = core_run_pipeline(&spec, &model.inner, &corpus, &mut provider, &cfg).map_err(err)?;
    let mut value = report.serialize(serde_json::value::Serializer).map_err(err)?;
    value["exit_code"] = report.exit_code().into();
    to_py(py, &value)
}

#[pymodule]
fn vacfv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Property>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(parse_properties, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(vacuity, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
