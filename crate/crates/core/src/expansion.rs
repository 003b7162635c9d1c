//! Template expansion: free-form paraphrases of each generated instruction,
//! each with an `{INPUT}` slot, crossed with every input of that instruction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, CompletionBackend, CompletionRequest, DecodingParams};
use crate::config::{AttemptAccounting, RunConfig};
use crate::par::map_bounded;
use crate::prompting::{render_rephrase_prompt, PromptError, RephraseDemo, INPUT_LABEL, INSTRUCTION_LABEL};
use crate::structgen::{CallLedger, CoreExample};
use crate::text::{match_key, INPUT_PLACEHOLDER};

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// A validated alternative formulation of one instruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseTemplate {
    pub template: String,
    pub source_instruction: String,
    /// Zero-based index of the sampling call that produced it.
    pub attempt_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case")]
pub enum ParaphraseRejection {
    #[error("formulation has no {INPUT_PLACEHOLDER} placeholder")]
    NoPlaceholder,
    #[error("formulation copies the original instruction")]
    CopyOfOriginal,
    #[error("formulation repeats an accepted one")]
    DuplicateFormulation,
}

/// Accepts `candidate` iff it is not the original instruction, has the
/// placeholder and is not an already accepted formulation. Comparisons are
/// on NFC-normalized, trimmed text.
pub fn validate_paraphrase(
    candidate: &str,
    original: &str,
    already_accepted: &[ParaphraseTemplate],
) -> Result<ParaphraseTemplate, ParaphraseRejection> {
    let template = candidate.trim();
    let key = match_key(template);
    if key == match_key(original) {
        return Err(ParaphraseRejection::CopyOfOriginal);
    }
    if !template.contains(INPUT_PLACEHOLDER) {
        return Err(ParaphraseRejection::NoPlaceholder);
    }
    if already_accepted.iter().any(|t| match_key(&t.template) == key) {
        return Err(ParaphraseRejection::DuplicateFormulation);
    }
    Ok(ParaphraseTemplate {
        template: template.to_string(),
        source_instruction: original.to_string(),
        attempt_index: 0,
    })
}

/// The formulation is the completion text up to the first blank line.
fn extract_formulation(completion: &str) -> &str {
    let text = completion.trim_start();
    text.split("\n\n").next().unwrap_or_default().trim()
}

/// Replaces every `{INPUT}` with `input` in a single pass; placeholders
/// inside `input` itself are left alone.
pub fn instantiate(template: &ParaphraseTemplate, input: &str) -> String {
    template.template.replace(INPUT_PLACEHOLDER, input)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParaphraseOptions {
    pub want: usize,
    pub max_attempts: usize,
    pub accounting: AttemptAccounting,
    pub params: DecodingParams,
}

impl Default for ParaphraseOptions {
    fn default() -> Self {
        Self::from_config(&RunConfig::default())
    }
}

impl ParaphraseOptions {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            want: config.expansion.want,
            max_attempts: config.expansion.max_attempts,
            accounting: config.expansion.accounting,
            params: config.decoding.rephrase.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParaphraseOutcome {
    pub templates: Vec<ParaphraseTemplate>,
    pub calls: u64,
    pub rejections: Vec<ParaphraseRejection>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Samples formulations until `want` are accepted or `max_attempts` failed
/// validations have accumulated. Issues at most `want + max_attempts - 1`
/// calls and may return fewer than `want` templates.
pub fn generate_paraphrases<B: CompletionBackend + ?Sized>(
    backend: &B,
    demos: &[RephraseDemo],
    instruction: &str,
    options: &ParaphraseOptions,
) -> Result<ParaphraseOutcome, ExpansionError> {
    let prompt = render_rephrase_prompt(demos, instruction)?;
    let mut outcome = ParaphraseOutcome::default();
    let mut failures = 0usize;
    while outcome.templates.len() < options.want && failures < options.max_attempts {
        let request = CompletionRequest::new(prompt.clone(), options.params.clone()).with_sample_index(outcome.calls);
        let result = backend.complete(&request)?;
        outcome.prompt_tokens += result.usage.prompt_tokens;
        outcome.completion_tokens += result.usage.completion_tokens;
        let attempt = outcome.calls as u32;
        outcome.calls += 1;
        match validate_paraphrase(extract_formulation(&result.text), instruction, &outcome.templates) {
            Ok(mut t) => {
                t.attempt_index = attempt;
                outcome.templates.push(t);
                if options.accounting == AttemptAccounting::Consecutive {
                    failures = 0;
                }
            }
            Err(r) => {
                failures += 1;
                outcome.rejections.push(r);
            }
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulationKind {
    Core,
    Paraphrase,
}

/// One record of the expanded dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedRecord {
    pub id: String,
    pub formulation_kind: FormulationKind,
    /// Core: the instruction. Paraphrase: the template with its placeholder.
    pub task_text: String,
    pub input: String,
    pub rendered_task: String,
    pub output: String,
    pub core_example_id: String,
    pub template_attempt: Option<u32>,
}

impl ExpandedRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Structured rendering used for core-format records.
pub fn core_task_text(instruction: &str, input: &str) -> String {
    format!("{INSTRUCTION_LABEL} {instruction}\n{INPUT_LABEL} {input}")
}

pub fn expanded_id(n: usize) -> String {
    format!("full-{n:06}")
}

/// Crosses every template of an instruction with every input of that
/// instruction. For each core example, in order, emits its core-format
/// record followed by one paraphrase record per template. The total is
/// the sum over instructions of `(1 + templates) * inputs`.
pub fn expand_dataset(
    core: &[CoreExample],
    templates: &HashMap<String, Vec<ParaphraseTemplate>>,
) -> Vec<ExpandedRecord> {
    let mut out = Vec::with_capacity(core.len() * 3);
    for example in core {
        let instruction = example.instruction();
        let input = example.input();
        out.push(ExpandedRecord {
            id: expanded_id(out.len() + 1),
            formulation_kind: FormulationKind::Core,
            task_text: instruction.to_string(),
            input: input.to_string(),
            rendered_task: core_task_text(instruction, input),
            output: example.output.clone(),
            core_example_id: example.id.clone(),
            template_attempt: None,
        });
        for t in templates.get(instruction).into_iter().flatten() {
            out.push(ExpandedRecord {
                id: expanded_id(out.len() + 1),
                formulation_kind: FormulationKind::Paraphrase,
                task_text: t.template.clone(),
                input: input.to_string(),
                rendered_task: instantiate(t, input),
                output: example.output.clone(),
                core_example_id: example.id.clone(),
                template_attempt: Some(t.attempt_index),
            });
        }
    }
    out
}

/// Expected `expand_dataset` size for `(inputs, templates)` per instruction.
pub fn expanded_record_count<I>(groups: I) -> u64
where
    I: IntoIterator<Item = (u64, u64)>,
{
    groups.into_iter().map(|(inputs, templates)| (1 + templates) * inputs).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionExpansion {
    pub instruction: String,
    pub inputs: usize,
    pub templates: usize,
    pub calls: u64,
    pub rejections: Vec<ParaphraseRejection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub core_records: usize,
    pub instructions: usize,
    pub expanded_records: usize,
    /// Fraction of instructions that received `want` templates.
    pub full_template_rate: f64,
    pub template_histogram: Vec<usize>,
    pub calls: CallLedger,
    pub per_instruction: Vec<InstructionExpansion>,
}

#[derive(Debug, Clone)]
pub struct ExpansionRun {
    pub records: Vec<ExpandedRecord>,
    pub templates: HashMap<String, Vec<ParaphraseTemplate>>,
    pub report: ExpansionReport,
}

/// Generates paraphrases for every distinct instruction (in first-seen
/// order, up to `max_in_flight` instructions at a time) and assembles the
/// expanded dataset.
pub fn expand_core_dataset<B: CompletionBackend + ?Sized>(
    backend: &B,
    demos: &[RephraseDemo],
    core: &[CoreExample],
    config: &RunConfig,
) -> Result<ExpansionRun, ExpansionError> {
    let mut order: Vec<&str> = Vec::new();
    let mut inputs: HashMap<&str, usize> = HashMap::new();
    for e in core {
        let n = inputs.entry(e.instruction()).or_insert(0);
        if *n == 0 {
            order.push(e.instruction());
        }
        *n += 1;
    }
    let options = ParaphraseOptions::from_config(config);
    let outcomes = map_bounded(&order, config.max_in_flight, |instruction| {
        generate_paraphrases(backend, demos, instruction, &options)
    });

    let mut templates = HashMap::new();
    let mut per_instruction = Vec::with_capacity(order.len());
    let mut calls = CallLedger::default();
    let mut histogram = vec![0usize; options.want + 1];
    for (instruction, outcome) in order.iter().zip(outcomes) {
        let outcome = outcome?;
        calls.rephrase_calls += outcome.calls;
        calls.prompt_tokens += outcome.prompt_tokens;
        calls.completion_tokens += outcome.completion_tokens;
        let t = outcome.templates.len();
        if t >= histogram.len() {
            histogram.resize(t + 1, 0);
        }
        histogram[t] += 1;
        per_instruction.push(InstructionExpansion {
            instruction: instruction.to_string(),
            inputs: inputs[instruction],
            templates: t,
            calls: outcome.calls,
            rejections: outcome.rejections,
        });
        templates.insert(instruction.to_string(), outcome.templates);
    }

    let records = expand_dataset(core, &templates);
    let full = per_instruction.iter().filter(|p| p.templates >= options.want).count();
    let report = ExpansionReport {
        core_records: core.len(),
        instructions: order.len(),
        expanded_records: records.len(),
        full_template_rate: if order.is_empty() {
            0.0
        } else {
            full as f64 / order.len() as f64
        },
        template_histogram: histogram,
        calls,
        per_instruction,
    };
    Ok(ExpansionRun {
        records,
        templates,
        report,
    })
}
