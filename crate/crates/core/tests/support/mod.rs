//! Generators and reference implementations shared by the property and
//! acceptance tests. The references are written independently of the library
//! code they check.
#![allow(dead_code)]

use std::collections::HashMap;

use proptest::prelude::*;
use unicode_normalization::UnicodeNormalization;

use synthinst::expansion::ParaphraseTemplate;
use synthinst::prompting::Demonstration;
use synthinst::structgen::{CoreExample, Field, ParseError, Provenance, StructuredCandidate};
use synthinst::SeedSet;

const LABELS: [&str; 4] = ["Instruction:", "Input:", "Constraints:", "Output:"];

fn is_banner_line(line: &str) -> bool {
    line.trim()
        .strip_prefix("Example ")
        .is_some_and(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()))
}

fn line_is_structural(line: &str) -> bool {
    let t = line.trim_start();
    LABELS.iter().any(|l| t.starts_with(l)) || is_banner_line(line)
}

/// Trimmed, non-empty text of one to three lines. No line is blank, a
/// field label, or an example banner.
pub fn field_text() -> impl Strategy<Value = String> {
    let line = "[A-Za-z0-9\u{e9}\u{4e2d}\"'(][A-Za-z0-9 ,.;:!?'\"(){}\u{e9}\u{4e2d}-]{0,48}[A-Za-z0-9.?!)\"]";
    prop::collection::vec(line, 1..=3)
        .prop_map(|lines| lines.join("\n"))
        .prop_filter("no structural lines", |s| {
            s.trim() == s && s.lines().all(|l| !l.trim().is_empty() && !line_is_structural(l))
        })
}

pub fn constraints_text() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("None.".to_string()),
        Just("None".to_string()),
        Just("none".to_string()),
        field_text(),
    ]
}

pub fn demonstration() -> impl Strategy<Value = Demonstration> {
    (
        field_text(),
        field_text(),
        constraints_text(),
        prop::option::of(field_text()),
    )
        .prop_map(|(i, n, c, o)| Demonstration::new(i, n, c, o).expect("generated demo is valid"))
}

/// Reference key for "identical": NFC, then surrounding whitespace removed.
pub fn ref_key(s: &str) -> String {
    s.nfc().collect::<String>().trim().to_string()
}

pub type Item = Result<StructuredCandidate, ParseError>;

pub fn candidate(instruction: &str, input: &str, constraints: &str) -> StructuredCandidate {
    StructuredCandidate {
        instruction: instruction.into(),
        input: input.into(),
        constraints: constraints.into(),
        provenance: Provenance::default(),
    }
}

/// Candidate streams drawn from a small vocabulary so duplicates are common,
/// including whitespace and normalization variants, missing-field errors and
/// verbatim copies of seed demonstrations.
pub fn candidate_stream(seeds: &[SeedSet], len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Item>> {
    let seed_instructions: Vec<String> = seeds.iter().flat_map(|s| s.demos.iter().map(|d| d.instruction.clone())).collect();
    let seed_inputs: Vec<String> = seeds.iter().flat_map(|s| s.demos.iter().map(|d| d.input.clone())).collect();
    let instructions = prop_oneof![
        8 => (0..12usize).prop_map(|i| format!("Task number {i}.")),
        1 => (0..12usize).prop_map(|i| format!("  Task number {i}.\t")),
        1 => Just("Describe the caf\u{e9}.".to_string()),
        1 => Just("Describe the cafe\u{301}.".to_string()),
        1 => prop::sample::select(seed_instructions),
    ];
    let inputs = prop_oneof![
        8 => (0..6usize).prop_map(|i| format!("input {i}")),
        1 => (0..6usize).prop_map(|i| format!(" input {i} ")),
        1 => prop::sample::select(seed_inputs),
    ];
    let constraints = prop_oneof![Just("None.".to_string()), Just("Answer briefly.".to_string())];
    let field = prop::sample::select(vec![Field::Instruction, Field::Input, Field::Constraints]);
    let item = prop_oneof![
        9 => (instructions, inputs, constraints).prop_map(|(i, n, c)| Ok(candidate(&i, &n, &c))),
        1 => field.prop_map(|f| Err(ParseError::MissingField(f))),
    ];
    prop::collection::vec(item, len)
}

#[derive(Debug, Default, PartialEq, Eq, Clone, Copy)]
pub struct RefCounts {
    pub missing_fields: usize,
    pub seed_copy: usize,
    pub duplicate: usize,
    pub kept: usize,
}

/// Straight-line reading of the three filters with linear scans.
pub fn reference_filter(stream: &[Item], seeds: &[SeedSet]) -> (Vec<StructuredCandidate>, RefCounts) {
    let demo_keys: Vec<(String, String)> = seeds
        .iter()
        .flat_map(|s| s.demos.iter())
        .map(|d| (ref_key(&d.instruction), ref_key(&d.input)))
        .collect();
    let mut kept: Vec<StructuredCandidate> = Vec::new();
    let mut kept_keys: Vec<(String, String)> = Vec::new();
    let mut counts = RefCounts::default();
    for item in stream {
        let Ok(c) = item else {
            counts.missing_fields += 1;
            continue;
        };
        let key = (ref_key(&c.instruction), ref_key(&c.input));
        if demo_keys.iter().any(|d| d.0 == key.0 || d.1 == key.1) {
            counts.seed_copy += 1;
            continue;
        }
        if kept_keys.contains(&key) {
            counts.duplicate += 1;
            continue;
        }
        counts.kept += 1;
        kept.push(c.clone());
        kept_keys.push(key);
    }
    (kept, counts)
}

/// Core examples and templates for `groups[i] = (inputs, templates)`.
pub fn grouped_dataset(groups: &[(usize, usize)]) -> (Vec<CoreExample>, HashMap<String, Vec<ParaphraseTemplate>>) {
    let mut core = Vec::new();
    let mut templates = HashMap::new();
    for (g, &(inputs, t)) in groups.iter().enumerate() {
        let instruction = format!("Instruction {g}");
        for n in 0..inputs {
            core.push(CoreExample {
                id: format!("core-{:06}", core.len() + 1),
                candidate: candidate(&instruction, &format!("input {g}-{n}"), "None."),
                output: format!("output {g}-{n}"),
            });
        }
        let list = (0..t)
            .map(|k| ParaphraseTemplate {
                template: format!("Variant {k} of task {g}: {{INPUT}}"),
                source_instruction: instruction.clone(),
                attempt_index: k as u32,
            })
            .collect();
        templates.insert(instruction, list);
    }
    // interleave instructions so grouping is exercised
    core.sort_by_key(|e| (e.candidate.input.split('-').nth(1).map(str::to_string), e.id.clone()));
    (core, templates)
}

/// Hand-rolled multiset F1 over whitespace tokens.
pub fn reference_overlap(a: &str, b: &str) -> f64 {
    let ta: Vec<&str> = a.split_whitespace().collect();
    let tb: Vec<&str> = b.split_whitespace().collect();
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let mut used = vec![false; tb.len()];
    let mut common = 0usize;
    for x in &ta {
        if let Some(j) = (0..tb.len()).find(|&j| !used[j] && tb[j] == *x) {
            used[j] = true;
            common += 1;
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / ta.len() as f64;
    let recall = common as f64 / tb.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

pub fn text_pair() -> impl Strategy<Value = (String, String)> {
    let words = prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "the", "cat", "sat", "mat", "\u{e9}t\u{e9}"]), 0..12);
    (words.clone(), words).prop_map(|(a, b)| (a.join(" "), b.join("  ")))
}

/// Compares `actual` with `tests/snapshots/<name>`; rewrites the file when
/// `SYNTHINST_UPDATE_SNAPSHOTS` is set.
pub fn check_snapshot(name: &str, actual: &str) -> Result<(), String> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots").join(name);
    if std::env::var_os("SYNTHINST_UPDATE_SNAPSHOTS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("snapshot {name} differs"))
    }
}

/// Removes whole `Example k` banner lines.
pub fn strip_banners(prompt: &str) -> String {
    prompt
        .split_inclusive('\n')
        .filter(|l| !is_banner_line(l))
        .collect()
}

/// Removes the trailing cue of an enumeration prompt.
pub fn strip_enumeration_cue(prompt: &str) -> &str {
    prompt.strip_suffix("Example 4\n").expect("enumeration cue")
}

/// Replaces each field value of `from` with the matching value of `to`,
/// scanning left to right.
pub fn substitute_demos(prompt: &str, from: &SeedSet, to: &SeedSet, constraints: bool) -> String {
    let mut out = String::new();
    let mut rest = prompt;
    for (a, b) in from.demos.iter().zip(&to.demos) {
        let mut pairs = vec![
            (format!("Instruction: {}\n", a.instruction), format!("Instruction: {}\n", b.instruction)),
            (format!("Input: {}\n", a.input), format!("Input: {}\n", b.input)),
        ];
        if constraints {
            pairs.push((format!("Constraints: {}\n", a.constraints), format!("Constraints: {}\n", b.constraints)));
        }
        for (old, new) in pairs {
            let at = rest.find(&old).expect("field present");
            out.push_str(&rest[..at]);
            out.push_str(&new);
            rest = &rest[at + old.len()..];
        }
    }
    out.push_str(rest);
    out
}

/// Removes each demo's constraints line.
pub fn remove_constraint_lines(prompt: &str, seed: &SeedSet) -> String {
    let mut out = prompt.to_string();
    for d in &seed.demos {
        let line = format!("Constraints: {}\n", d.constraints);
        let at = out.find(&line).expect("constraints line present");
        out.replace_range(at..at + line.len(), "");
    }
    out
}

/// Inserts each demo's output line right after its constraints line.
pub fn insert_output_lines(prompt: &str, seed: &SeedSet) -> String {
    let mut out = String::new();
    let mut rest = prompt;
    for d in &seed.demos {
        let line = format!("Constraints: {}\n", d.constraints);
        let at = rest.find(&line).expect("constraints line present") + line.len();
        out.push_str(&rest[..at]);
        out.push_str(&format!("Output: {}\n", d.output.as_deref().unwrap()));
        rest = &rest[at..];
    }
    out.push_str(rest);
    out
}
