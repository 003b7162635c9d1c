//! Writes the small replay fixture used by the golden tests.
//!
//! A canned responder stands in for the model; every call made by
//! `generate` (target 4) and `expand` is recorded.
//!
//! cargo run -p synthinst --example build_demo_fixture -- crates/core/fixtures/demo.jsonl

use std::collections::HashMap;
use std::path::PathBuf;

use synthinst::backend::{
    write_fixture, BackendError, CompletionBackend, CompletionRequest, CompletionResult, FinishReason,
    RecordingBackend, Usage,
};
use synthinst::commands::record_with;
use synthinst::prompting::{builtin_seed_sets, OUTPUT_LABEL};
use synthinst::RunConfig;

const I1: &str = "You are given a list of integers. Return the largest integer in the list.";
const I2: &str = "In this task, you are given a word. Write a word that rhymes with it.";
const I3: &str = "Describe the smell of the given color.";
const I4: &str = "Given two dates, determine whether the first one comes earlier than the second.";

struct Responder {
    generation: Vec<String>,
    /// Keyed by input.
    outputs: HashMap<&'static str, &'static str>,
    paraphrases: HashMap<&'static str, Vec<String>>,
}

fn last_field<'a>(prompt: &'a str, label: &str) -> &'a str {
    prompt.lines().rev().find_map(|l| l.strip_prefix(label)).unwrap_or("")
}

fn tokens(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

impl CompletionBackend for Responder {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let prompt = &request.prompt;
        let text: String = if prompt.ends_with(OUTPUT_LABEL) {
            self.outputs
                .get(last_field(prompt, "Input: "))
                .copied()
                .unwrap_or("")
                .to_string()
        } else if prompt.ends_with("Alternative formulation:") {
            self.paraphrases
                .get(last_field(prompt, "Instruction: "))
                .and_then(|v| v.get(request.sample_index as usize))
                .cloned()
                .unwrap_or_else(|| " no placeholder here\n".to_string())
        } else {
            self.generation
                .get(request.sample_index as usize)
                .cloned()
                .ok_or(BackendError::ScriptExhausted)?
        };
        Ok(CompletionResult {
            usage: Usage {
                prompt_tokens: tokens(prompt),
                completion_tokens: tokens(&text),
            },
            text,
            finish_reason: FinishReason::Stop,
        })
    }
}

fn structured(instruction: &str, input: &str, constraints: &str) -> String {
    format!("Instruction: {instruction}\nInput: {input}\nConstraints: {constraints}\n")
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/fixtures/demo.jsonl".into())
        .into();
    let seeds = builtin_seed_sets().expect("builtin seeds");
    let copied = &seeds[3].demos[1];

    let generation = vec![
        structured(I1, "[3, 17, -4, 9]", "The output should be an integer."),
        "Instruction: Translate the sentence into French.\nConstraints: None.\n".to_string(),
        structured(I2, "cat", "None."),
        structured(&copied.instruction, "moon, whisper, garden", "None."),
        structured(I1, "[3, 17, -4, 9]", "The output should be an integer."),
        structured(I1, "[0, -2, 5]", "The output should be an integer."),
        structured(I3, "blue", "None."),
        structured(I4, "March 3, 2001 and June 9, 1999", "The output should be 'Yes' or 'No'."),
    ];
    let outputs = HashMap::from([
        ("[3, 17, -4, 9]", " 17"),
        ("cat", " hat"),
        ("[0, -2, 5]", " 5"),
        ("blue", "   "),
        ("March 3, 2001 and June 9, 1999", " No"),
    ]);
    let lines = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let paraphrases = HashMap::from([
        (
            I1,
            lines(&[
                " What is the biggest number in {INPUT}?\n\nExample 3",
                " Find the maximum value of this list: {INPUT}\n",
            ]),
        ),
        (
            I2,
            lines(&[
                &format!(" {I2}\n"),
                " Give me a word that rhymes with \"{INPUT}\".\n",
                " Give me a word that rhymes with \"{INPUT}\".\n",
                " {INPUT} rhymes with which word?\n",
            ]),
        ),
        (
            I4,
            lines(&[
                " Is the first date earlier?\n",
                "\n",
                " Decide which date is first.\n",
                " Compare the dates.\n",
                " Tell me about the dates.\n",
            ]),
        ),
    ]);
    let responder = Responder {
        generation,
        outputs,
        paraphrases,
    };

    let dir = tempfile::tempdir().expect("temp dir");
    let mut config = RunConfig::default();
    config.target_core_examples = 4;
    config.paths.output_dir = dir.path().to_path_buf();
    let recorder = RecordingBackend::new(responder);
    record_with(&recorder, &config).expect("demo run");
    let records = recorder.into_records();
    write_fixture(&out, &records).expect("write fixture");
    println!("wrote {} entries to {}", records.len(), out.display());
}
