//! Python bindings for the self-adaptation engine.
//!
//! Exposes the schema, utility model, and engine pipeline as Python classes.
//! States cross the boundary as `dict[str, str | None]` (`None` marks an
//! uncertain reading); responses and assessments come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use selfadapt_core::engine::HandleOutcome;
use selfadapt_core::knowledge::{load_kb, save_kb};
use selfadapt_core::{
    AdaptationEngine, AdaptationRequest, AttributeValue, EngineConfig, KnowledgeBase,
    SystemSchema, SystemState, UtilityModel,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn state_from_dict(dict: &Bound<'_, PyDict>) -> PyResult<SystemState> {
    let mut state = SystemState::new();
    for (key, value) in dict.iter() {
        let name: String = key.extract()?;
        let value: Option<String> = value.extract()?;
        state.set(
            name,
            match value {
                Some(v) => AttributeValue::Known(v),
                None => AttributeValue::Uncertain,
            },
        );
    }
    Ok(state)
}

/// serde_json -> Python conversion for response/assessment payloads.
fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<PyObject> {
    Ok(match value {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .unbind()
                    .into()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.unbind().into()
        }
    })
}

fn to_py_dict<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let json = serde_json::to_value(value).map_err(runtime_error)?;
    json_to_py(py, &json)
}

/// A managed system's attribute sheet.
#[pyclass(name = "Schema")]
#[derive(Clone)]
struct PySchema {
    inner: SystemSchema,
}

#[pymethods]
impl PySchema {
    /// Load a schema from a JSON file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PySchema {
            inner: SystemSchema::from_file(path).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(PySchema {
            inner: SystemSchema::from_json_str(json).map_err(value_error)?,
        })
    }

    fn attribute_names(&self) -> Vec<String> {
        self.inner
            .attributes()
            .iter()
            .map(|a| a.name().to_string())
            .collect()
    }

    /// Number of distinct fully-known states (product of domain sizes).
    fn state_space_size(&self) -> u128 {
        self.inner.state_space_size()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    /// Raise ValueError unless the dict is a complete, in-domain state.
    fn validate_state(&self, state: &Bound<'_, PyDict>) -> PyResult<()> {
        let state = state_from_dict(state)?;
        self.inner.validate_state(&state).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "Schema(attributes={}, states={})",
            self.inner.len(),
            self.inner.state_space_size()
        )
    }
}

/// The weighted piecewise utility model of a managed system.
#[pyclass(name = "UtilityModel")]
#[derive(Clone)]
struct PyUtilityModel {
    inner: UtilityModel,
}

#[pymethods]
impl PyUtilityModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyUtilityModel {
            inner: UtilityModel::from_file(path).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(PyUtilityModel {
            inner: UtilityModel::from_json_str(json).map_err(value_error)?,
        })
    }

    fn ut(&self) -> f64 {
        self.inner.ut()
    }

    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    fn function_names(&self) -> Vec<String> {
        self.inner
            .functions()
            .iter()
            .map(|f| f.name().to_string())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "UtilityModel(functions={}, ut={})",
            self.inner.functions().len(),
            self.inner.ut()
        )
    }
}

/// The adaptation engine: analysis, retrieval, constructive search,
/// retention, and uncertainty handling over one schema and model.
#[pyclass(name = "Engine")]
struct PyEngine {
    inner: AdaptationEngine,
    request_counter: u64,
}

#[pymethods]
impl PyEngine {
    /// Build an engine. `config_path` and `kb_path` are optional JSON files;
    /// without them the engine uses defaults and starts with an empty
    /// knowledge base.
    #[new]
    #[pyo3(signature = (schema, model, config_path=None, kb_path=None))]
    fn new(
        schema: PySchema,
        model: PyUtilityModel,
        config_path: Option<&str>,
        kb_path: Option<&str>,
    ) -> PyResult<Self> {
        let config = match config_path {
            Some(path) => EngineConfig::from_file(path).map_err(value_error)?,
            None => EngineConfig::default(),
        };
        let effective = model
            .inner
            .clone()
            .with_thresholds(config.ut, config.epsilon)
            .map_err(value_error)?;
        let kb = match kb_path {
            Some(path) => {
                let report =
                    load_kb(path, &schema.inner, &effective).map_err(value_error)?;
                report.kb
            }
            None => KnowledgeBase::for_schema(&schema.inner),
        };
        Ok(PyEngine {
            inner: AdaptationEngine::new(schema.inner, model.inner, config, kb)
                .map_err(value_error)?,
            request_counter: 0,
        })
    }

    fn ut(&self) -> f64 {
        self.inner.model().ut()
    }

    /// Overall utility of a fully-known state.
    fn overall_utility(&self, state: &Bound<'_, PyDict>) -> PyResult<f64> {
        let state = state_from_dict(state)?;
        self.inner.schema().validate_state(&state).map_err(value_error)?;
        self.inner
            .model()
            .overall_utility(&state)
            .map_err(value_error)
    }

    /// Whether a fully-known state reaches or approaches the threshold.
    fn needs_adaptation(&self, state: &Bound<'_, PyDict>) -> PyResult<bool> {
        let state = state_from_dict(state)?;
        self.inner.schema().validate_state(&state).map_err(value_error)?;
        self.inner.needs_adaptation(&state).map_err(value_error)
    }

    /// Quantify the uncertainty of a state (use None values for uncertain
    /// attributes). Returns a dict with candidate_count, breaking_count,
    /// breaker_probability, uncertain_ratio, and uncertainty_level.
    fn assess(&self, py: Python<'_>, state: &Bound<'_, PyDict>) -> PyResult<PyObject> {
        let state = state_from_dict(state)?;
        self.inner.schema().validate_state(&state).map_err(value_error)?;
        let assessment = self.inner.assess(&state).map_err(runtime_error)?;
        to_py_dict(py, &assessment)
    }

    /// Run the full pipeline on one observed state. Returns a dict whose
    /// `outcome` is "healthy", "withheld", or "adapted", with the assessment
    /// and response filled in where they exist. Raises RuntimeError when no
    /// feasible state exists.
    fn handle(&mut self, py: Python<'_>, state: &Bound<'_, PyDict>) -> PyResult<PyObject> {
        let state = state_from_dict(state)?;
        self.inner.schema().validate_state(&state).map_err(value_error)?;
        self.request_counter += 1;
        let request = AdaptationRequest {
            id: format!("py-{}", self.request_counter),
            state,
            issued_at: self.request_counter,
        };
        let outcome = self.inner.handle_state(&request).map_err(runtime_error)?;
        let result = PyDict::new(py);
        match outcome {
            HandleOutcome::Healthy => {
                result.set_item("outcome", "healthy")?;
            }
            HandleOutcome::Withheld { assessment } => {
                result.set_item("outcome", "withheld")?;
                result.set_item("assessment", to_py_dict(py, &assessment)?)?;
            }
            HandleOutcome::Adapted {
                assessment,
                response,
            } => {
                result.set_item("outcome", "adapted")?;
                if let Some(assessment) = assessment {
                    result.set_item("assessment", to_py_dict(py, &assessment)?)?;
                }
                result.set_item("response", to_py_dict(py, &response)?)?;
            }
        }
        Ok(result.unbind().into())
    }

    /// Adapt a fully-known state unconditionally and return the response
    /// dict. Raises RuntimeError when no feasible state exists.
    fn adapt(&mut self, py: Python<'_>, state: &Bound<'_, PyDict>) -> PyResult<PyObject> {
        let state = state_from_dict(state)?;
        self.inner.schema().validate_state(&state).map_err(value_error)?;
        if !state.is_fully_known() {
            return Err(value_error(
                "state has uncertain values; use handle() for uncertain states",
            ));
        }
        self.request_counter += 1;
        let request = AdaptationRequest {
            id: format!("py-{}", self.request_counter),
            state,
            issued_at: self.request_counter,
        };
        let response = self.inner.adapt(&request).map_err(runtime_error)?;
        to_py_dict(py, &response)
    }

    fn kb_len(&self) -> usize {
        self.inner.kb().len()
    }

    fn kb_case_ids(&self) -> Vec<String> {
        self.inner
            .kb()
            .cases()
            .iter()
            .map(|c| c.id().to_string())
            .collect()
    }

    /// Persist the knowledge base to a JSON file.
    fn save_kb(&self, path: &str) -> PyResult<()> {
        save_kb(self.inner.kb(), path).map_err(runtime_error)
    }

    /// Classify a fully-known state's attributes: which break the threshold
    /// and which merely depress the utility.
    fn analyze(&self, py: Python<'_>, state: &Bound<'_, PyDict>) -> PyResult<PyObject> {
        let state = state_from_dict(state)?;
        self.inner.schema().validate_state(&state).map_err(value_error)?;
        let analysis = self
            .inner
            .model()
            .analyze_request(&state, self.inner.schema())
            .map_err(value_error)?;
        to_py_dict(py, &analysis)
    }

    /// All fully-known states an uncertain state could be.
    fn completions(
        &self,
        py: Python<'_>,
        state: &Bound<'_, PyDict>,
    ) -> PyResult<PyObject> {
        let state = state_from_dict(state)?;
        self.inner.schema().validate_state(&state).map_err(value_error)?;
        let completions = selfadapt_core::uncertainty::enumerate_completions(
            &state,
            self.inner.schema(),
            self.inner.config().kappa_cap,
        )
        .map_err(runtime_error)?;
        let list = PyList::empty(py);
        for completion in completions {
            list.append(to_py_dict(py, &completion)?)?;
        }
        Ok(list.unbind().into())
    }

    fn __repr__(&self) -> String {
        format!(
            "Engine(ut={}, kb={})",
            self.inner.model().ut(),
            self.inner.kb().len()
        )
    }
}

#[pymodule]
fn selfadapt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySchema>()?;
    m.add_class::<PyUtilityModel>()?;
    m.add_class::<PyEngine>()?;
    Ok(())
}
