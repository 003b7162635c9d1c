//! Python bindings for the synthinst pipeline.
//!
//! Structured results cross the boundary as plain dicts and lists.

use std::path::{Path, PathBuf};

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use synthinst::analysis::{self, CostModel, PairSampling, TokenOverlap};
use synthinst::commands::{self, AnalyzeOptions, CommandError, RecordSubset};
use synthinst::expansion::{self, ParaphraseTemplate};
use synthinst::export::ExportFormat;
use synthinst::prompting;
use synthinst::structgen::parse_structured_completion;
use synthinst::{PromptStyle, RunConfig};

create_exception!(synthinst, SynthinstError, PyException, "A pipeline command failed.");

fn command_err(e: CommandError) -> PyErr {
    SynthinstError::new_err(e.to_json())
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn style(name: &str) -> PyResult<PromptStyle> {
    name.parse().map_err(PyValueError::new_err)
}

#[pyclass(name = "Demonstration", module = "synthinst", from_py_object)]
#[derive(Clone)]
struct PyDemonstration {
    inner: prompting::Demonstration,
}

#[pymethods]
impl PyDemonstration {
    #[new]
    #[pyo3(signature = (instruction, input, constraints = "None.".to_string(), output = None))]
    fn new(instruction: String, input: String, constraints: String, output: Option<String>) -> PyResult<Self> {
        let inner = prompting::Demonstration::new(instruction, input, constraints, output).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn instruction(&self) -> &str {
        &self.inner.instruction
    }

    #[getter]
    fn input(&self) -> &str {
        &self.inner.input
    }

    #[getter]
    fn constraints(&self) -> &str {
        &self.inner.constraints
    }

    #[getter]
    fn output(&self) -> Option<&str> {
        self.inner.output.as_deref()
    }

    fn __repr__(&self) -> String {
        format!("Demonstration(instruction={:?}, input={:?})", self.inner.instruction, self.inner.input)
    }
}

#[pyclass(name = "SeedSet", module = "synthinst", from_py_object)]
#[derive(Clone)]
struct PySeedSet {
    inner: prompting::SeedSet,
}

#[pymethods]
impl PySeedSet {
    #[new]
    fn new(id: u8, demos: Vec<PyDemonstration>) -> PyResult<Self> {
        let inner = prompting::SeedSet::new(id, demos.into_iter().map(|d| d.inner).collect()).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn id(&self) -> u8 {
        self.inner.id
    }

    #[getter]
    fn demos(&self) -> Vec<PyDemonstration> {
        self.inner.demos.iter().map(|d| PyDemonstration { inner: d.clone() }).collect()
    }

    fn __repr__(&self) -> String {
        format!("SeedSet(id={})", self.inner.id)
    }
}

/// Run configuration. Unset fields take their defaults.
#[pyclass(name = "Config", module = "synthinst", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (json = None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(raw) => RunConfig::from_json(raw).map_err(value_err)?,
            None => RunConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: RunConfig::from_path(&path).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_canonical_json()
    }

    #[getter]
    fn get_style(&self) -> &'static str {
        self.inner.style.as_str()
    }

    #[setter]
    fn set_style(&mut self, name: &str) -> PyResult<()> {
        self.inner.style = style(name)?;
        Ok(())
    }

    #[getter]
    fn get_seed_set_ids(&self) -> Vec<u8> {
        self.inner.seed_set_ids.clone()
    }

    #[setter]
    fn set_seed_set_ids(&mut self, ids: Vec<u8>) {
        self.inner.seed_set_ids = ids;
    }

    #[getter]
    fn get_target(&self) -> usize {
        self.inner.target_core_examples
    }

    #[setter]
    fn set_target(&mut self, n: usize) {
        self.inner.target_core_examples = n;
    }

    #[getter]
    fn get_constraints_in_input_gen(&self) -> bool {
        self.inner.constraints_in_input_gen
    }

    #[setter]
    fn set_constraints_in_input_gen(&mut self, on: bool) {
        self.inner.constraints_in_input_gen = on;
    }

    #[getter]
    fn get_constraints_in_output_gen(&self) -> bool {
        self.inner.constraints_in_output_gen
    }

    #[setter]
    fn set_constraints_in_output_gen(&mut self, on: bool) {
        self.inner.constraints_in_output_gen = on;
    }

    #[getter]
    fn get_one_step(&self) -> bool {
        self.inner.one_step
    }

    #[setter]
    fn set_one_step(&mut self, on: bool) {
        self.inner.one_step = on;
    }

    #[getter]
    fn get_max_in_flight(&self) -> usize {
        self.inner.max_in_flight
    }

    #[setter]
    fn set_max_in_flight(&mut self, n: usize) {
        self.inner.max_in_flight = n;
    }

    #[getter]
    fn get_rng_seed(&self) -> u64 {
        self.inner.rng_seed
    }

    #[setter]
    fn set_rng_seed(&mut self, seed: u64) {
        self.inner.rng_seed = seed;
    }

    #[getter]
    fn get_fixture(&self) -> Option<PathBuf> {
        self.inner.paths.fixture.clone()
    }

    #[setter]
    fn set_fixture(&mut self, path: Option<PathBuf>) {
        self.inner.paths.fixture = path;
    }

    #[getter]
    fn get_output_dir(&self) -> PathBuf {
        self.inner.paths.output_dir.clone()
    }

    #[setter]
    fn set_output_dir(&mut self, path: PathBuf) {
        self.inner.paths.output_dir = path;
    }
}

#[pyfunction]
fn builtin_seed_sets() -> PyResult<Vec<PySeedSet>> {
    let sets = prompting::builtin_seed_sets().map_err(value_err)?;
    Ok(sets.into_iter().map(|inner| PySeedSet { inner }).collect())
}

#[pyfunction]
#[pyo3(signature = (seed, style = "enumeration", include_constraints = true))]
fn render_generation_prompt(seed: &PySeedSet, style: &str, include_constraints: bool) -> PyResult<String> {
    prompting::render_generation_prompt(&seed.inner, self::style(style)?, include_constraints).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (seed, style = "enumeration"))]
fn render_one_step_prompt(seed: &PySeedSet, style: &str) -> PyResult<String> {
    prompting::render_one_step_prompt(&seed.inner, self::style(style)?).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (instruction, input, constraints = "None.", use_constraints = true))]
fn render_output_prompt(instruction: &str, input: &str, constraints: &str, use_constraints: bool) -> String {
    prompting::render_output_prompt(instruction, input, constraints, use_constraints)
}

#[pyfunction]
fn render_rephrase_prompt(instruction: &str) -> PyResult<String> {
    let demos = prompting::builtin_rephrase_demos().map_err(value_err)?;
    prompting::render_rephrase_prompt(&demos, instruction).map_err(value_err)
}

/// Parses the first structured block of `text` into a dict.
#[pyfunction]
#[pyo3(signature = (text, expect_output = false))]
fn parse_completion<'py>(py: Python<'py>, text: &str, expect_output: bool) -> PyResult<Bound<'py, PyDict>> {
    let fields = parse_structured_completion(text, expect_output).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("instruction", fields.instruction)?;
    d.set_item("input", fields.input)?;
    d.set_item("constraints", fields.constraints)?;
    d.set_item("output", fields.output)?;
    Ok(d)
}

/// Returns the accepted template or raises `ValueError` naming the rejection.
#[pyfunction]
#[pyo3(signature = (candidate, original, accepted = Vec::new()))]
fn validate_paraphrase(candidate: &str, original: &str, accepted: Vec<String>) -> PyResult<String> {
    let accepted: Vec<ParaphraseTemplate> = accepted
        .into_iter()
        .map(|template| ParaphraseTemplate {
            template,
            source_instruction: original.to_string(),
            attempt_index: 0,
        })
        .collect();
    match expansion::validate_paraphrase(candidate, original, &accepted) {
        Ok(t) => Ok(t.template),
        Err(r) => Err(PyValueError::new_err(serde_json::to_value(r).unwrap().as_str().unwrap().to_string())),
    }
}

#[pyfunction]
fn instantiate(template: String, input: &str) -> String {
    let t = ParaphraseTemplate {
        template,
        source_instruction: String::new(),
        attempt_index: 0,
    };
    expansion::instantiate(&t, input)
}

/// Records produced by expanding groups of `(inputs, templates)`.
#[pyfunction]
fn expanded_record_count(groups: Vec<(u64, u64)>) -> u64 {
    expansion::expanded_record_count(groups)
}

#[pyfunction]
fn token_overlap_score(a: &str, b: &str) -> f64 {
    analysis::token_overlap_score(a, b)
}

#[pyfunction]
#[pyo3(signature = (texts, n_pairs = analysis::DEFAULT_PAIRS, seed = 0, exhaustive = false))]
fn similarity_distribution<'py>(
    py: Python<'py>,
    texts: Vec<String>,
    n_pairs: usize,
    seed: u64,
    exhaustive: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let sampling = if exhaustive {
        PairSampling::Exhaustive
    } else {
        PairSampling::Random { n_pairs, seed }
    };
    let dist = py
        .detach(|| analysis::sample_pair_similarities(&texts, sampling, &TokenOverlap))
        .map_err(value_err)?;
    to_py(py, &dist)
}

#[pyfunction]
#[pyo3(signature = (core_count, expanded_count = 0))]
fn estimate_cost<'py>(py: Python<'py>, core_count: u64, expanded_count: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &analysis::estimate_cost(core_count, expanded_count, &CostModel::default()))
}

/// Runs core generation; returns the generation report, output path and
/// whether the run stopped early on its call budget.
#[pyfunction]
fn generate<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let out = py.detach(|| commands::cmd_generate(&config.inner)).map_err(command_err)?;
    to_py(
        py,
        &serde_json::json!({
            "report": out.run.report,
            "partial": out.run.is_partial(),
            "core": out.core_path,
            "manifest": out.manifest_path,
        }),
    )
}

#[pyfunction]
#[pyo3(signature = (config, core_path = None))]
fn expand<'py>(py: Python<'py>, config: &PyConfig, core_path: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let out = py
        .detach(|| commands::cmd_expand(core_path.as_deref(), &config.inner))
        .map_err(command_err)?;
    to_py(
        py,
        &serde_json::json!({
            "report": out.report,
            "full": out.full_path,
            "manifest": out.manifest_path,
        }),
    )
}

#[pyfunction]
#[pyo3(signature = (dataset, config, subset = "all", exhaustive = false))]
fn analyze<'py>(
    py: Python<'py>,
    dataset: PathBuf,
    config: &PyConfig,
    subset: &str,
    exhaustive: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let options = AnalyzeOptions {
        subset: subset.parse::<RecordSubset>().map_err(PyValueError::new_err)?,
        exhaustive,
        scorer_command: None,
    };
    let out = py
        .detach(|| commands::cmd_analyze(&dataset, &config.inner, &options))
        .map_err(command_err)?;
    to_py(
        py,
        &serde_json::json!({"stats": out.stats, "similarity": out.similarity, "cost": out.cost}),
    )
}

/// Writes `dataset` to `out` in `format`; returns the number of records.
#[pyfunction]
#[pyo3(signature = (dataset, out, format = "training_jsonl"))]
fn export(dataset: PathBuf, out: PathBuf, format: &str) -> PyResult<usize> {
    let format: ExportFormat = format.parse().map_err(PyValueError::new_err)?;
    let r = commands::cmd_export(Path::new(&dataset), format, &out).map_err(command_err)?;
    Ok(r.records)
}

#[pymodule]
#[pyo3(name = "synthinst")]
fn synthinst_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SynthinstError", m.py().get_type::<SynthinstError>())?;
    m.add_class::<PyDemonstration>()?;
    m.add_class::<PySeedSet>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(builtin_seed_sets, m)?)?;
    m.add_function(wrap_pyfunction!(render_generation_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(render_one_step_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(render_output_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(render_rephrase_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(parse_completion, m)?)?;
    m.add_function(wrap_pyfunction!(validate_paraphrase, m)?)?;
    m.add_function(wrap_pyfunction!(instantiate, m)?)?;
    m.add_function(wrap_pyfunction!(expanded_record_count, m)?)?;
    m.add_function(wrap_pyfunction!(token_overlap_score, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_cost, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(export, m)?)?;
    Ok(())
}
