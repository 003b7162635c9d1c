//! Core dataset generation: sample structured examples from seed prompts,
//! filter them, then generate their outputs.

mod filter;
mod parse;
mod pipeline;

use serde::{Deserialize, Serialize};

pub use filter::{
    filter_candidates, CandidateFilter, DedupIndex, FilterCounts, FilterReport, Rejection, RejectionSample,
    SeedIndex, Verdict, MAX_SAMPLES_PER_REASON,
};
pub use parse::{parse_structured_completion, Field, ParseError, ParsedFields};
pub use pipeline::{
    generate_core_dataset, generate_one_step, generate_output, CallLedger, CoreRun, DiscardReason,
    GenerationReport, OutputOptions, OutputOutcome, PipelineError,
};

use crate::prompting::{render_output_prompt, PromptStyle};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed_set_id: u8,
    pub style: PromptStyle,
    pub prompt_sha256: String,
    pub completion_sha256: String,
}

/// A generated instruction, input and constraints triple awaiting its output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredCandidate {
    pub instruction: String,
    pub input: String,
    pub constraints: String,
    pub provenance: Provenance,
}

impl StructuredCandidate {
    pub fn from_fields(fields: ParsedFields, provenance: Provenance) -> Self {
        Self {
            instruction: fields.instruction,
            input: fields.input,
            constraints: fields.constraints,
            provenance,
        }
    }

    pub fn output_prompt(&self, use_constraints: bool) -> String {
        render_output_prompt(&self.instruction, &self.input, &self.constraints, use_constraints)
    }
}

/// A filtered candidate together with its generated output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreExample {
    pub id: String,
    pub candidate: StructuredCandidate,
    pub output: String,
}

/// On-disk JSONL shape of a [`CoreExample`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreRecord {
    pub id: String,
    pub instruction: String,
    pub input: String,
    pub constraints: String,
    pub output: String,
    pub provenance: Provenance,
}

impl From<&CoreExample> for CoreRecord {
    fn from(e: &CoreExample) -> Self {
        Self {
            id: e.id.clone(),
            instruction: e.candidate.instruction.clone(),
            input: e.candidate.input.clone(),
            constraints: e.candidate.constraints.clone(),
            output: e.output.clone(),
            provenance: e.candidate.provenance.clone(),
        }
    }
}

impl From<CoreRecord> for CoreExample {
    fn from(r: CoreRecord) -> Self {
        Self {
            id: r.id,
            candidate: StructuredCandidate {
                instruction: r.instruction,
                input: r.input,
                constraints: r.constraints,
                provenance: r.provenance,
            },
            output: r.output,
        }
    }
}

impl CoreExample {
    pub fn instruction(&self) -> &str {
        &self.candidate.instruction
    }

    pub fn input(&self) -> &str {
        &self.candidate.input
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&CoreRecord::from(self)).expect("record serializes")
    }
}

/// Sequential id used for core examples, in acceptance order.
pub fn core_id(n: usize) -> String {
    format!("core-{n:06}")
}
