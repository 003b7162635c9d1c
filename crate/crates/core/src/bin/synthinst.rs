use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use synthinst::commands::{
    cmd_analyze, cmd_expand, cmd_export, cmd_generate, cmd_record_fixture, resolve_config, AnalyzeOptions,
    CommandError, Overrides, RecordSubset, EXIT_OK,
};
use synthinst::export::ExportFormat;
use synthinst::PromptStyle;

#[derive(Parser)]
#[command(name = "synthinst", version, about = "Generate, expand and analyze synthetic instruction datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Shared {
    /// JSON config file or a run manifest.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    style: Option<PromptStyle>,
    /// Comma-separated seed set ids, e.g. 1,3.
    #[arg(long, global = true, value_delimiter = ',')]
    seed_sets: Option<Vec<u8>>,
    #[arg(long, global = true)]
    no_constraints_input: bool,
    #[arg(long, global = true)]
    no_constraints_output: bool,
    #[arg(long, global = true)]
    one_step: bool,
    #[arg(long, global = true)]
    target: Option<usize>,
    #[arg(long, global = true)]
    rng_seed: Option<u64>,
    /// Replay calls from this fixture instead of the live endpoint.
    #[arg(long, global = true)]
    fixture: Option<PathBuf>,
    #[arg(long, global = true)]
    max_in_flight: Option<usize>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

impl Shared {
    fn overrides(&self) -> Overrides {
        Overrides {
            style: self.style,
            seed_sets: self.seed_sets.clone(),
            no_constraints_input: self.no_constraints_input,
            no_constraints_output: self.no_constraints_output,
            one_step: self.one_step,
            target: self.target,
            rng_seed: self.rng_seed,
            fixture: self.fixture.clone(),
            max_in_flight: self.max_in_flight,
            output_dir: self.output_dir.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the core dataset.
    Generate {
        #[command(flatten)]
        shared: Shared,
    },
    /// Paraphrase instructions of a core dataset and cross them with inputs.
    Expand {
        /// Core JSONL; defaults to core.jsonl in the output directory.
        #[arg(long)]
        core: Option<PathBuf>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Dataset statistics and input similarity distribution.
    Analyze {
        dataset: PathBuf,
        /// all, core or paraphrase
        #[arg(long, default_value = "all")]
        subset: RecordSubset,
        #[arg(long)]
        exhaustive: bool,
        /// External scorer command line, e.g. "python score.py".
        #[arg(long)]
        scorer_cmd: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Write a dataset as raw records or training pairs.
    Export {
        dataset: PathBuf,
        #[arg(long, default_value = "training_jsonl")]
        format: ExportFormat,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Run generate and expand live and record every call to a fixture.
    RecordFixture {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
}

fn run(cli: Cli) -> Result<i32, CommandError> {
    match cli.command {
        Command::Generate { shared } => {
            let config = resolve_config(shared.config.as_deref(), &shared.overrides())?;
            let out = cmd_generate(&config)?;
            let r = &out.run.report;
            println!(
                "{}",
                json!({
                    "command": "generate",
                    "produced": r.produced,
                    "target": r.target,
                    "budget_exhausted": r.budget_exhausted,
                    "core": out.core_path,
                    "manifest": out.manifest_path,
                })
            );
            Ok(out.exit_code())
        }
        Command::Expand { core, shared } => {
            let config = resolve_config(shared.config.as_deref(), &shared.overrides())?;
            let out = cmd_expand(core.as_deref(), &config)?;
            println!(
                "{}",
                json!({
                    "command": "expand",
                    "instructions": out.report.instructions,
                    "expanded_records": out.report.expanded_records,
                    "full_template_rate": out.report.full_template_rate,
                    "full": out.full_path,
                    "manifest": out.manifest_path,
                })
            );
            Ok(EXIT_OK)
        }
        Command::Analyze {
            dataset,
            subset,
            exhaustive,
            scorer_cmd,
            shared,
        } => {
            let config = resolve_config(shared.config.as_deref(), &shared.overrides())?;
            let options = AnalyzeOptions {
                subset,
                exhaustive,
                scorer_command: scorer_cmd.map(|c| c.split_whitespace().map(String::from).collect()),
            };
            let out = cmd_analyze(&dataset, &config, &options)?;
            println!(
                "{}",
                json!({
                    "command": "analyze",
                    "records": out.stats.records,
                    "malformed": out.stats.malformed.len(),
                    "similarity": out.similarity.as_ref().map(|s| &s.summary),
                })
            );
            Ok(EXIT_OK)
        }
        Command::Export {
            dataset,
            format,
            out,
            shared: _,
        } => {
            let r = cmd_export(&dataset, format, &out)?;
            println!(
                "{}",
                json!({"command": "export", "records": r.records, "malformed": r.malformed, "out": r.path})
            );
            Ok(EXIT_OK)
        }
        Command::RecordFixture { out, shared } => {
            let config = resolve_config(shared.config.as_deref(), &shared.overrides())?;
            let n = cmd_record_fixture(&config, &out)?;
            println!("{}", json!({"command": "record-fixture", "entries": n, "fixture": out}));
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
