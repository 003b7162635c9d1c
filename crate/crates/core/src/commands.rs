//! Library side of the `synthinst` command line: each command reads its
//! inputs, runs the pipeline and writes its artifacts into the configured
//! output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::analysis::{
    dataset_stats, estimate_cost, parse_dataset, sample_pair_similarities, CostModel, CostReport, DatasetRow,
    DatasetStats, ExternalScorer, PairSampling, SimilarityDistribution, SimilarityScorer, TokenOverlap,
};
use crate::backend::{
    write_fixture, BackendError, CompletionBackend, HttpBackend, RecordingBackend, ReplayBackend,
};
use crate::config::{ConfigError, RunConfig};
use crate::expansion::{expand_core_dataset, ExpansionError, ExpansionReport, FormulationKind};
use crate::export::{export_dataset, ExportFormat};
use crate::prompting::{builtin_rephrase_demos, builtin_seed_sets, load_rephrase_demos, load_seed_sets, PromptError};
use crate::structgen::{
    generate_core_dataset, generate_one_step, CoreExample, CoreRecord, CoreRun, GenerationReport, PipelineError,
};
use crate::text::{sha256_bytes_hex, sha256_hex};

pub const CORE_FILE: &str = "core.jsonl";
pub const FULL_FILE: &str = "full.jsonl";
pub const GENERATION_REPORT_FILE: &str = "generation_report.json";
pub const EXPANSION_REPORT_FILE: &str = "expansion_report.json";
pub const STATS_FILE: &str = "stats.json";
pub const SIMILARITY_FILE: &str = "similarity.json";
pub const HISTOGRAM_FILE: &str = "similarity_histogram.csv";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(BackendError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Dataset { path: String, message: String },
}

impl From<BackendError> for CommandError {
    fn from(e: BackendError) -> Self {
        CommandError::Backend(e)
    }
}

impl From<PipelineError> for CommandError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Backend(b) => CommandError::Backend(b),
            PipelineError::Prompt(p) => CommandError::Prompt(p),
            PipelineError::UnknownSeedSet(id) => CommandError::Usage(format!("seed set {id} is not available")),
        }
    }
}

impl From<ExpansionError> for CommandError {
    fn from(e: ExpansionError) -> Self {
        match e {
            ExpansionError::Backend(b) => CommandError::Backend(b),
            ExpansionError::Prompt(p) => CommandError::Prompt(p),
        }
    }
}

impl CommandError {
    pub fn kind(&self) -> &'static str {
        match self {
            CommandError::Config(_) | CommandError::Usage(_) | CommandError::Prompt(_) => "config_error",
            CommandError::Backend(BackendError::FixtureNotFound(_)) => "fixture_not_found",
            CommandError::Backend(BackendError::MissingToken(_)) => "missing_token",
            CommandError::Backend(_) => "backend_error",
            CommandError::Io { .. } => "io_error",
            CommandError::Dataset { .. } => "dataset_error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) | CommandError::Usage(_) | CommandError::Prompt(_) => EXIT_CONFIG,
            CommandError::Backend(BackendError::FixtureNotFound(_) | BackendError::MissingToken(_)) => EXIT_CONFIG,
            CommandError::Backend(_) => EXIT_BACKEND,
            CommandError::Io { .. } => EXIT_IO,
            CommandError::Dataset { .. } => EXIT_CONFIG,
        }
    }

    /// Single-line JSON written to stderr on failure.
    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String, CommandError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CommandError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

/// Command-line values layered over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub style: Option<crate::prompting::PromptStyle>,
    pub seed_sets: Option<Vec<u8>>,
    pub no_constraints_input: bool,
    pub no_constraints_output: bool,
    pub one_step: bool,
    pub target: Option<usize>,
    pub rng_seed: Option<u64>,
    pub fixture: Option<PathBuf>,
    pub max_in_flight: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(s) = self.style {
            config.style = s;
        }
        if let Some(ids) = &self.seed_sets {
            config.seed_set_ids = ids.clone();
        }
        if self.no_constraints_input {
            config.constraints_in_input_gen = false;
        }
        if self.no_constraints_output {
            config.constraints_in_output_gen = false;
        }
        if self.one_step {
            config.one_step = true;
        }
        if let Some(t) = self.target {
            config.target_core_examples = t;
        }
        if let Some(s) = self.rng_seed {
            config.rng_seed = s;
        }
        if let Some(f) = &self.fixture {
            config.paths.fixture = Some(f.clone());
        }
        if let Some(m) = self.max_in_flight {
            config.max_in_flight = m;
        }
        if let Some(d) = &self.output_dir {
            config.paths.output_dir = d.clone();
        }
    }
}

/// Loads `config_path` (or defaults) and applies `overrides`.
pub fn resolve_config(config_path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CommandError> {
    let mut config = match config_path {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}

/// Replay when a fixture is configured, otherwise the HTTP endpoint.
pub fn open_backend(config: &RunConfig) -> Result<Box<dyn CompletionBackend>, CommandError> {
    match &config.paths.fixture {
        Some(path) => Ok(Box::new(ReplayBackend::from_path(path)?)),
        None => Ok(Box::new(HttpBackend::require_token(config.backend.clone())?)),
    }
}

fn fixture_sha(config: &RunConfig) -> Result<Option<String>, CommandError> {
    match &config.paths.fixture {
        Some(p) => {
            let bytes = fs::read(p).map_err(|_| BackendError::FixtureNotFound(p.display().to_string()))?;
            Ok(Some(sha256_bytes_hex(&bytes)))
        }
        None => Ok(None),
    }
}

/// Everything needed to repeat a command: the embedded config and the
/// hashes of what it read and wrote.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub fixture_sha256: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub config: RunConfig,
}

impl Manifest {
    fn new(command: &str, config: &RunConfig) -> Result<Self, CommandError> {
        Ok(Self {
            command: command.into(),
            config_sha256: sha256_hex(&config.to_canonical_json()),
            fixture_sha256: fixture_sha(config)?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            config: config.clone(),
        })
    }

    fn output(&mut self, name: &str, contents: &str) {
        self.outputs.insert(name.into(), sha256_hex(contents));
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}_manifest.json")
    }

    fn write(&self, dir: &Path) -> Result<PathBuf, CommandError> {
        let path = dir.join(Self::file_name(&self.command));
        write_text(&path, &pretty(self))?;
        Ok(path)
    }
}

fn load_seeds(config: &RunConfig) -> Result<Vec<crate::prompting::SeedSet>, CommandError> {
    Ok(match &config.paths.seed_sets {
        Some(p) => load_seed_sets(p)?,
        None => builtin_seed_sets()?,
    })
}

fn load_demos(config: &RunConfig) -> Result<Vec<crate::prompting::RephraseDemo>, CommandError> {
    Ok(match &config.paths.rephrase_demos {
        Some(p) => load_rephrase_demos(p)?,
        None => builtin_rephrase_demos()?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerationSummary {
    #[serde(flatten)]
    pub report: GenerationReport,
    pub cost: CostReport,
}

#[derive(Debug, Clone)]
pub struct GenerateOutcome {
    pub run: CoreRun,
    pub core_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl GenerateOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.run.is_partial() {
            EXIT_PARTIAL
        } else {
            EXIT_OK
        }
    }
}

pub fn core_jsonl(examples: &[CoreExample]) -> String {
    examples.iter().map(|e| e.to_json_line() + "\n").collect()
}

/// Runs core generation with `backend` and writes the core JSONL, the report
/// and the manifest.
pub fn generate_with<B: CompletionBackend + ?Sized>(
    backend: &B,
    config: &RunConfig,
) -> Result<GenerateOutcome, CommandError> {
    let seeds = load_seeds(config)?;
    let run = if config.one_step {
        generate_one_step(backend, &seeds, config)?
    } else {
        generate_core_dataset(backend, &seeds, config)?
    };
    let dir = &config.paths.output_dir;
    let core = core_jsonl(&run.examples);
    let summary = GenerationSummary {
        report: run.report.clone(),
        cost: estimate_cost(run.examples.len() as u64, 0, &CostModel::default()),
    };
    let report = pretty(&summary);
    let core_path = dir.join(CORE_FILE);
    write_text(&core_path, &core)?;
    write_text(&dir.join(GENERATION_REPORT_FILE), &report)?;
    let mut manifest = Manifest::new("generate", config)?;
    manifest.output(CORE_FILE, &core);
    manifest.output(GENERATION_REPORT_FILE, &report);
    let manifest_path = manifest.write(dir)?;
    Ok(GenerateOutcome {
        run,
        core_path,
        manifest_path,
    })
}

pub fn cmd_generate(config: &RunConfig) -> Result<GenerateOutcome, CommandError> {
    let backend = open_backend(config)?;
    generate_with(&*backend, config)
}

pub fn read_core(path: &Path) -> Result<Vec<CoreExample>, CommandError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CoreRecord = serde_json::from_str(line).map_err(|e| CommandError::Dataset {
            path: path.display().to_string(),
            message: format!("line {}: {e}", i + 1),
        })?;
        out.push(record.into());
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionSummary {
    #[serde(flatten)]
    pub report: ExpansionReport,
    pub cost: CostReport,
}

#[derive(Debug, Clone)]
pub struct ExpandOutcome {
    pub report: ExpansionReport,
    pub full_path: PathBuf,
    pub manifest_path: PathBuf,
}

pub fn expand_with<B: CompletionBackend + ?Sized>(
    backend: &B,
    core_path: &Path,
    config: &RunConfig,
) -> Result<ExpandOutcome, CommandError> {
    let core_text = read_text(core_path)?;
    let core = read_core(core_path)?;
    let demos = load_demos(config)?;
    let run = expand_core_dataset(backend, &demos, &core, config)?;
    let paraphrases = run
        .records
        .iter()
        .filter(|r| r.formulation_kind == FormulationKind::Paraphrase)
        .count();
    let summary = ExpansionSummary {
        report: run.report.clone(),
        cost: estimate_cost(core.len() as u64, paraphrases as u64, &CostModel::default()),
    };
    let dir = &config.paths.output_dir;
    let full: String = run.records.iter().map(|r| r.to_json_line() + "\n").collect();
    let report = pretty(&summary);
    let full_path = dir.join(FULL_FILE);
    write_text(&full_path, &full)?;
    write_text(&dir.join(EXPANSION_REPORT_FILE), &report)?;
    let mut manifest = Manifest::new("expand", config)?;
    manifest.inputs.insert("core".into(), sha256_hex(&core_text));
    manifest.output(FULL_FILE, &full);
    manifest.output(EXPANSION_REPORT_FILE, &report);
    let manifest_path = manifest.write(dir)?;
    Ok(ExpandOutcome {
        report: run.report,
        full_path,
        manifest_path,
    })
}

/// Expands `core_path`, defaulting to the core file in the output directory.
pub fn cmd_expand(core_path: Option<&Path>, config: &RunConfig) -> Result<ExpandOutcome, CommandError> {
    let default = config.paths.output_dir.join(CORE_FILE);
    let core_path = core_path.unwrap_or(&default);
    let backend = open_backend(config)?;
    expand_with(&*backend, core_path, config)
}

/// Which records take part in pair sampling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RecordSubset {
    #[default]
    All,
    Core,
    Paraphrase,
}

impl std::str::FromStr for RecordSubset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Self::All),
            "core" => Ok(Self::Core),
            "paraphrase" => Ok(Self::Paraphrase),
            other => Err(format!("unknown subset {other:?}; expected all, core or paraphrase")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub subset: RecordSubset,
    /// Score every pair instead of sampling.
    pub exhaustive: bool,
    /// Program and arguments of an external scorer; token overlap otherwise.
    pub scorer_command: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub stats: DatasetStats,
    pub similarity: Option<SimilarityDistribution>,
    pub cost: CostReport,
}

/// Writes stats, the similarity distribution of record inputs and its
/// histogram CSV. Datasets with fewer than two selected records get stats
/// only.
pub fn cmd_analyze(
    dataset: &Path,
    config: &RunConfig,
    options: &AnalyzeOptions,
) -> Result<AnalyzeOutcome, CommandError> {
    let parsed = parse_dataset(&read_text(dataset)?);
    let stats = dataset_stats(&parsed, config.expansion.want);
    let inputs: Vec<&str> = parsed
        .rows
        .iter()
        .filter(|r| match options.subset {
            RecordSubset::All => true,
            RecordSubset::Core => r.kind() == "core",
            RecordSubset::Paraphrase => r.kind() == "paraphrase",
        })
        .map(DatasetRow::input)
        .collect();
    let sampling = if options.exhaustive {
        PairSampling::Exhaustive
    } else {
        PairSampling::Random {
            n_pairs: config.similarity_pairs,
            seed: config.rng_seed,
        }
    };
    let external = options
        .scorer_command
        .as_ref()
        .map(|cmd| match cmd.split_first() {
            Some((program, args)) => Ok(ExternalScorer::new(program, args.to_vec())),
            None => Err(CommandError::Usage("empty scorer command".into())),
        })
        .transpose()?;
    let scorer: &dyn SimilarityScorer = match &external {
        Some(s) => s,
        None => &TokenOverlap,
    };
    let similarity = if inputs.len() >= 2 {
        Some(
            sample_pair_similarities(&inputs, sampling, scorer)
                .map_err(|e| CommandError::Usage(e.to_string()))?,
        )
    } else {
        None
    };
    let core_count = stats.by_kind.get("core").copied().unwrap_or(0) as u64;
    let paraphrase_count = stats.by_kind.get("paraphrase").copied().unwrap_or(0) as u64;
    let cost = estimate_cost(core_count, paraphrase_count, &CostModel::default());

    let dir = &config.paths.output_dir;
    write_text(&dir.join(STATS_FILE), &pretty(&json!({"stats": stats, "cost": cost})))?;
    if let Some(sim) = &similarity {
        write_text(&dir.join(SIMILARITY_FILE), &pretty(sim))?;
        write_text(&dir.join(HISTOGRAM_FILE), &sim.histogram_csv())?;
    }
    Ok(AnalyzeOutcome {
        stats,
        similarity,
        cost,
    })
}

#[derive(Debug, Clone)]
pub struct ExportOutcome {
    pub path: PathBuf,
    pub records: usize,
    pub malformed: usize,
}

pub fn cmd_export(dataset: &Path, format: ExportFormat, out: &Path) -> Result<ExportOutcome, CommandError> {
    let export = export_dataset(&read_text(dataset)?, format);
    write_text(out, &export.jsonl)?;
    Ok(ExportOutcome {
        path: out.to_path_buf(),
        records: export.records,
        malformed: export.malformed.len(),
    })
}

/// Runs generation and expansion against the live endpoint while recording
/// every call, then writes the fixture for later replay.
pub fn cmd_record_fixture(config: &RunConfig, fixture_out: &Path) -> Result<usize, CommandError> {
    let recorder = RecordingBackend::new(HttpBackend::require_token(config.backend.clone())?);
    let mut live = config.clone();
    live.paths.fixture = None;
    record_with(&recorder, &live)?;
    let records = recorder.into_records();
    write_fixture(fixture_out, &records)?;
    Ok(records.len())
}

/// Generate then expand through `recorder`.
pub fn record_with<B: CompletionBackend>(
    recorder: &RecordingBackend<B>,
    config: &RunConfig,
) -> Result<(), CommandError> {
    let generated = generate_with(recorder, config)?;
    expand_with(recorder, &generated.core_path, config)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        let e = CommandError::from(BackendError::FixtureNotFound("x".into()));
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"], "fixture_not_found");
        assert!(v["message"].as_str().unwrap().contains("fixture not found"));
        assert_eq!(CommandError::from(BackendError::Auth { status: 401 }).exit_code(), EXIT_BACKEND);
    }

    #[test]
    fn overrides_layer_over_config() {
        let mut c = RunConfig::default();
        Overrides {
            seed_sets: Some(vec![2]),
            no_constraints_output: true,
            target: Some(3),
            ..Overrides::default()
        }
        .apply(&mut c);
        assert_eq!(c.seed_set_ids, vec![2]);
        assert!(c.constraints_in_input_gen);
        assert!(!c.constraints_in_output_gen);
        assert_eq!(c.target_core_examples, 3);
    }
}
