//! Python bindings. The extension module is importable as `easytime`.
//!
//! Structured results (validation reports, results tables, effects) cross
//! the boundary as plain dicts and lists.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use easytime::compiler::{self, variable_name, CompiledProgram, Value as VarValue};
use easytime::model::{self, CompetitionModel};
use easytime::runtime::{self, Disposition, RaceConfig, RaceState, TimingEvent, DEFAULT_DEBOUNCE_MS};
use easytime::simulator::{self, SimConfig};
use easytime::dsl;

create_exception!(easytime, EasytimeError, PyValueError, "Base class for easytime errors.");
create_exception!(easytime, DslError, EasytimeError, "The DSL text could not be parsed or lowered.");
create_exception!(easytime, SchemaError, EasytimeError, "The exchange document does not fit the schema.");
create_exception!(easytime, ValidationError, EasytimeError, "The model has validation errors.");
create_exception!(easytime, EventError, EasytimeError, "An event failed a precondition.");

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn invalid(e: model::InvalidModel) -> PyErr {
    ValidationError::new_err(e.0.to_string())
}

/// A competition model.
#[pyclass(name = "Model", module = "easytime", frozen)]
struct PyModel {
    inner: CompetitionModel,
}

#[pymethods]
impl PyModel {
    /// Parses DSL source text.
    #[staticmethod]
    fn from_dsl(text: &str) -> PyResult<Self> {
        dsl::load(text)
            .map(|inner| PyModel { inner })
            .map_err(|e| DslError::new_err(e.to_string()))
    }

    /// Parses an exchange document.
    #[staticmethod]
    fn from_exchange(text: &str) -> PyResult<Self> {
        model::from_exchange(text)
            .map(|inner| PyModel { inner })
            .map_err(|e| SchemaError::new_err(e.to_string()))
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    /// Node names in list order.
    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.inner.nodes.iter().map(|n| n.name.clone()).collect()
    }

    /// The validation report as `{"errors": [...], "warnings": [...]}`.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.validate())
    }

    fn is_valid(&self) -> bool {
        self.inner.validate().is_valid()
    }

    /// Node ids along the path.
    fn ordering(&self) -> PyResult<Vec<u32>> {
        Ok(self.inner.ordering().map_err(invalid)?.into_iter().map(|id| id.0).collect())
    }

    /// Measuring-place id for each node id.
    fn measuring_places(&self) -> PyResult<Vec<(u32, u32)>> {
        Ok(self
            .inner
            .measuring_places()
            .map_err(invalid)?
            .into_iter()
            .map(|(node, mp)| (node.0, mp))
            .collect())
    }

    fn to_exchange(&self) -> String {
        model::to_exchange(&self.inner)
    }

    /// Canonical DSL text.
    fn to_dsl(&self) -> PyResult<String> {
        dsl::format(&self.inner).map_err(|e| ValidationError::new_err(e.to_string()))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, nodes={})", self.inner.name, self.inner.nodes.len())
    }
}

/// A compiled rule program.
#[pyclass(name = "Program", module = "easytime", frozen)]
struct PyProgram {
    inner: Arc<CompiledProgram>,
}

#[pymethods]
impl PyProgram {
    fn disassemble(&self) -> String {
        compiler::disassemble(&self.inner)
    }

    #[getter]
    fn rule_count(&self) -> usize {
        self.inner.rule_count()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!("Program({:?}, rules={})", self.inner.name, self.inner.rule_count())
    }
}

fn compile_model(model: &CompetitionModel) -> PyResult<Arc<CompiledProgram>> {
    compiler::compile(model)
        .map(Arc::new)
        .map_err(|e| ValidationError::new_err(e.to_string()))
}

#[pyfunction]
fn compile(model: &PyModel) -> PyResult<PyProgram> {
    Ok(PyProgram {
        inner: compile_model(&model.inner)?,
    })
}

/// An ordered list of timing events.
#[pyclass(name = "EventLog", module = "easytime", frozen)]
struct PyEventLog {
    inner: simulator::EventLog,
}

#[pymethods]
impl PyEventLog {
    /// Reads `ts_ms;bib;mp;agent` lines.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        simulator::EventLog::parse(text)
            .map(|inner| PyEventLog { inner })
            .map_err(|e| EasytimeError::new_err(format!("line {}: {}", e.line, e.message)))
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Events as `(ts_ms, bib, mp, agent)` tuples.
    #[getter]
    fn events(&self) -> Vec<(u64, u32, u32, u32)> {
        self.inner
            .events
            .iter()
            .map(|e| (e.timestamp, e.competitor, e.mp, e.agent))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.events.len()
    }
}

#[pyfunction]
#[pyo3(signature = (model, seed, competitors, noise=None))]
fn simulate(model: &PyModel, seed: u64, competitors: u32, noise: Option<f64>) -> PyResult<PyEventLog> {
    let mut config = SimConfig::new(seed, competitors);
    config.duplicate_probability = noise;
    simulator::simulate(&model.inner, &config)
        .map(|inner| PyEventLog { inner })
        .map_err(|e| EasytimeError::new_err(e.to_string()))
}

fn default_roster(log: &simulator::EventLog) -> Vec<u32> {
    let bibs: std::collections::BTreeSet<u32> = log.events.iter().map(|e| e.competitor).filter(|b| *b != 0).collect();
    bibs.into_iter().collect()
}

/// Replays `log` and returns the results table. Events that fail a
/// precondition are skipped.
#[pyfunction]
#[pyo3(signature = (model, log, roster=None, debounce_ms=DEFAULT_DEBOUNCE_MS))]
fn replay<'py>(
    py: Python<'py>,
    model: &PyModel,
    log: &PyEventLog,
    roster: Option<Vec<u32>>,
    debounce_ms: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let roster = roster.unwrap_or_else(|| default_roster(&log.inner));
    let mut race = PyRace::create(compile_model(&model.inner)?, &roster, debounce_ms)?;
    for event in &log.inner.events {
        let _ = race.state.apply_event(*event);
    }
    to_py(py, &race.state.results())
}

/// Results by direct counting, independent of the compiler.
#[pyfunction]
#[pyo3(signature = (model, log, roster=None, debounce_ms=DEFAULT_DEBOUNCE_MS))]
fn results_oracle<'py>(
    py: Python<'py>,
    model: &PyModel,
    log: &PyEventLog,
    roster: Option<Vec<u32>>,
    debounce_ms: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let roster = roster.unwrap_or_else(|| default_roster(&log.inner));
    let table = simulator::results_oracle(&model.inner, &log.inner, &roster, &RaceConfig::with_debounce(debounce_ms))
        .map_err(invalid)?;
    to_py(py, &table)
}

/// A live race fed one event at a time.
#[pyclass(name = "Race", module = "easytime")]
struct PyRace {
    state: RaceState,
    next_seq: u64,
}

impl PyRace {
    fn create(program: Arc<CompiledProgram>, roster: &[u32], debounce_ms: u64) -> PyResult<Self> {
        let state = runtime::init_race(program, roster, RaceConfig::with_debounce(debounce_ms))
            .map_err(|e| EasytimeError::new_err(e.to_string()))?;
        Ok(PyRace { state, next_seq: 0 })
    }
}

/// `(accepted, reason, [(bib, variable, old, new)])`
type ApplyResult = (bool, Option<String>, Vec<(u32, String, Py<PyAny>, Py<PyAny>)>);

fn value_py(py: Python<'_>, v: VarValue) -> PyResult<Py<PyAny>> {
    Ok(match v {
        VarValue::Time(t) => t.into_pyobject(py)?.into_any().unbind(),
        VarValue::Count(n) => n.into_pyobject(py)?.into_any().unbind(),
    })
}

#[pymethods]
impl PyRace {
    #[new]
    #[pyo3(signature = (program, roster, debounce_ms=DEFAULT_DEBOUNCE_MS))]
    fn new(program: &PyProgram, roster: Vec<u32>, debounce_ms: u64) -> PyResult<Self> {
        Self::create(program.inner.clone(), &roster, debounce_ms)
    }

    /// Applies one event. Returns `(accepted, reason, effects)` where each
    /// effect is `(bib, variable, old, new)`.
    fn apply(
        &mut self,
        py: Python<'_>,
        ts_ms: u64,
        bib: u32,
        mp: u32,
        agent: u32,
    ) -> PyResult<ApplyResult> {
        let event = TimingEvent {
            timestamp: ts_ms,
            competitor: bib,
            mp,
            agent,
            seq: self.next_seq,
        };
        let disposition = self
            .state
            .apply_event(event)
            .map_err(|e| EventError::new_err(e.to_string()))?;
        self.next_seq += 1;
        match disposition {
            Disposition::Accepted(effects) => {
                let program = self.state.program.clone();
                let effects = effects
                    .into_iter()
                    .map(|e| {
                        Ok((e.bib, variable_name(&program, e.var), value_py(py, e.old)?, value_py(py, e.new)?))
                    })
                    .collect::<PyResult<_>>()?;
                Ok((true, None, effects))
            }
            Disposition::Rejected(reason) => Ok((false, Some(reason.to_string()), Vec::new())),
        }
    }

    fn results<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.state.results())
    }

    /// The fixed-width results table.
    fn results_text(&self) -> String {
        self.state.results().render_text()
    }
}

#[pymodule]
#[pyo3(name = "easytime")]
fn easytime_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyModel>()?;
    m.add_class::<PyProgram>()?;
    m.add_class::<PyEventLog>()?;
    m.add_class::<PyRace>()?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(results_oracle, m)?)?;
    m.add("EasytimeError", py.get_type::<EasytimeError>())?;
    m.add("DslError", py.get_type::<DslError>())?;
    m.add("SchemaError", py.get_type::<SchemaError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("EventError", py.get_type::<EventError>())?;
    m.add("DEFAULT_DEBOUNCE_MS", DEFAULT_DEBOUNCE_MS)?;
    Ok(())
}
