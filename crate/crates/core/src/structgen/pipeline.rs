use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::filter::{CandidateFilter, FilterReport, Verdict};
use super::parse::{parse_structured_completion, ParseError};
use super::{core_id, CoreExample, Provenance, StructuredCandidate};
use crate::backend::{BackendError, CompletionBackend, CompletionRequest, DecodingParams, FinishReason, Usage};
use crate::config::RunConfig;
use crate::par::map_bounded;
use crate::prompting::{MetaPrompts, PromptError, SeedSet};
use crate::text::sha256_hex;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("seed set {0} is not available")]
    UnknownSeedSet(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    EmptyOutput,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputOutcome {
    Output(String),
    Discard(DiscardReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    pub use_constraints: bool,
    pub params: DecodingParams,
    pub keep_truncated: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        let config = RunConfig::default();
        Self {
            use_constraints: config.constraints_in_output_gen,
            params: config.decoding.output,
            keep_truncated: config.keep_truncated,
        }
    }
}

/// Calls and tokens spent by a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallLedger {
    pub generation_calls: u64,
    pub output_calls: u64,
    pub rephrase_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl CallLedger {
    pub fn total_calls(&self) -> u64 {
        self.generation_calls + self.output_calls + self.rephrase_calls
    }

    pub(crate) fn add_usage(&mut self, usage: Usage) {
        self.prompt_tokens += usage.prompt_tokens;
        self.completion_tokens += usage.completion_tokens;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub target: usize,
    pub produced: usize,
    pub one_step: bool,
    pub filter: FilterReport,
    pub discarded_empty_output: usize,
    pub discarded_truncated: usize,
    pub budget_exhausted: bool,
    pub calls: CallLedger,
}

#[derive(Debug, Clone)]
pub struct CoreRun {
    pub examples: Vec<CoreExample>,
    pub report: GenerationReport,
}

impl CoreRun {
    pub fn is_partial(&self) -> bool {
        self.report.budget_exhausted
    }
}

/// Greedy output generation for one candidate. Outputs are trimmed; empty
/// outputs are discarded, as are truncated ones unless `keep_truncated`.
pub fn generate_output<B: CompletionBackend + ?Sized>(
    backend: &B,
    candidate: &StructuredCandidate,
    options: &OutputOptions,
) -> Result<(OutputOutcome, Usage), BackendError> {
    let request = CompletionRequest::new(candidate.output_prompt(options.use_constraints), options.params.clone());
    let result = backend.complete(&request)?;
    Ok((classify_output(&result.text, result.finish_reason, options.keep_truncated), result.usage))
}

fn classify_output(text: &str, finish: FinishReason, keep_truncated: bool) -> OutputOutcome {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        OutputOutcome::Discard(DiscardReason::EmptyOutput)
    } else if finish == FinishReason::Length && !keep_truncated {
        OutputOutcome::Discard(DiscardReason::Truncated)
    } else {
        OutputOutcome::Output(trimmed.to_string())
    }
}

struct PreparedSeed {
    id: u8,
    prompt: String,
    prompt_sha256: String,
}

fn select_seeds(seeds: &[SeedSet], ids: &[u8]) -> Result<Vec<SeedSet>, PipelineError> {
    ids.iter()
        .map(|id| {
            seeds
                .iter()
                .find(|s| s.id == *id)
                .cloned()
                .ok_or(PipelineError::UnknownSeedSet(*id))
        })
        .collect()
}

/// Two-step generation: sample instruction/input/constraints, filter, then
/// generate each output greedily, until `target_core_examples` are accepted
/// or the call budget runs out.
///
/// Seed sets are cycled round-robin. Calls are issued in batches of at most
/// `max_in_flight`, never more than the number of examples still needed, and
/// processed in call order, so the issued calls and the output are the same
/// for every `max_in_flight` when the backend replays a fixture.
pub fn generate_core_dataset<B: CompletionBackend + ?Sized>(
    backend: &B,
    seeds: &[SeedSet],
    config: &RunConfig,
) -> Result<CoreRun, PipelineError> {
    run(backend, seeds, config, false)
}

/// Unified generation: the demonstrations carry outputs and one sampled
/// completion yields the whole record. No separate output calls are made.
pub fn generate_one_step<B: CompletionBackend + ?Sized>(
    backend: &B,
    seeds: &[SeedSet],
    config: &RunConfig,
) -> Result<CoreRun, PipelineError> {
    run(backend, seeds, config, true)
}

fn run<B: CompletionBackend + ?Sized>(
    backend: &B,
    seeds: &[SeedSet],
    config: &RunConfig,
    one_step: bool,
) -> Result<CoreRun, PipelineError> {
    let selected = select_seeds(seeds, &config.seed_set_ids)?;
    let meta = MetaPrompts::builtin().get(config.style);
    let prepared = selected
        .iter()
        .map(|s| {
            let prompt = if one_step {
                meta.render_one_step(s)?
            } else {
                meta.render_generation(s, config.constraints_in_input_gen)?
            };
            Ok(PreparedSeed {
                id: s.id,
                prompt_sha256: sha256_hex(&prompt),
                prompt,
            })
        })
        .collect::<Result<Vec<_>, PromptError>>()?;

    let mut input_params = config.decoding.input.clone();
    if input_params.stop.is_empty() {
        input_params.stop = meta.stop.clone();
    }
    let output_options = OutputOptions {
        use_constraints: config.constraints_in_output_gen,
        params: config.decoding.output.clone(),
        keep_truncated: config.keep_truncated,
    };

    let target = config.target_core_examples;
    let budget = config.generation_call_budget();
    let mut filter = CandidateFilter::new(&selected);
    let mut examples: Vec<CoreExample> = Vec::new();
    let mut report = GenerationReport {
        target,
        one_step,
        ..GenerationReport::default()
    };
    let mut next_call: u64 = 0;

    while examples.len() < target {
        if next_call >= budget {
            report.budget_exhausted = true;
            break;
        }
        let batch = (config.max_in_flight as u64)
            .min((target - examples.len()) as u64)
            .min(budget - next_call);
        let slots: Vec<u64> = (next_call..next_call + batch).collect();
        next_call += batch;

        let completions = map_bounded(&slots, config.max_in_flight, |&slot| {
            let seed = &prepared[(slot % prepared.len() as u64) as usize];
            let request = CompletionRequest::new(seed.prompt.clone(), input_params.clone()).with_sample_index(slot);
            backend.complete(&request)
        });

        // filtering is serialized in call order
        let mut accepted: Vec<(StructuredCandidate, Option<(String, FinishReason)>)> = Vec::new();
        for (slot, completion) in slots.iter().zip(completions) {
            let completion = completion?;
            report.calls.generation_calls += 1;
            report.calls.add_usage(completion.usage);
            let seed = &prepared[(*slot % prepared.len() as u64) as usize];
            let text = format!("{}{}", meta.completion_prefix, completion.text);
            let parsed = parse_structured_completion(&text, one_step).map(|mut fields| {
                let output = fields.output.take();
                let provenance = Provenance {
                    seed_set_id: seed.id,
                    style: config.style,
                    prompt_sha256: seed.prompt_sha256.clone(),
                    completion_sha256: sha256_hex(&completion.text),
                };
                (StructuredCandidate::from_fields(fields, provenance), output)
            });
            let verdict = filter.admit(parsed.as_ref().map(|(c, _)| c).map_err(|e: &ParseError| e));
            if verdict == Verdict::Kept {
                let (candidate, output) = parsed.expect("kept candidates parsed");
                accepted.push((candidate, output.map(|o| (o, completion.finish_reason))));
            }
        }

        let outcomes: Vec<OutputOutcome> = if one_step {
            accepted
                .iter()
                .map(|(_, o)| {
                    let (text, finish) = o.as_ref().expect("one-step candidates carry outputs");
                    classify_output(text, *finish, config.keep_truncated)
                })
                .collect()
        } else {
            let results = map_bounded(&accepted, config.max_in_flight, |(c, _)| {
                generate_output(backend, c, &output_options)
            });
            let mut outcomes = Vec::with_capacity(results.len());
            for r in results {
                let (outcome, usage) = r?;
                report.calls.output_calls += 1;
                report.calls.add_usage(usage);
                outcomes.push(outcome);
            }
            outcomes
        };

        for ((candidate, _), outcome) in accepted.into_iter().zip(outcomes) {
            match outcome {
                OutputOutcome::Output(output) => examples.push(CoreExample {
                    id: core_id(examples.len() + 1),
                    candidate,
                    output,
                }),
                OutputOutcome::Discard(DiscardReason::EmptyOutput) => report.discarded_empty_output += 1,
                OutputOutcome::Discard(DiscardReason::Truncated) => report.discarded_truncated += 1,
            }
        }
    }

    report.produced = examples.len();
    report.filter = filter.report().clone();
    Ok(CoreRun { examples, report })
}
