use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::expansion::{ExpandedRecord, FormulationKind};
use crate::structgen::CoreRecord;
use crate::text::is_no_constraints;

pub const LENGTH_BUCKET_WORDS: usize = 10;

/// One line of a core or expanded JSONL file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetRow {
    Core(CoreRecord),
    Expanded(ExpandedRecord),
}

impl DatasetRow {
    pub fn parse(line: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if value.get("formulation_kind").is_some() {
            serde_json::from_value(value).map(DatasetRow::Expanded)
        } else {
            serde_json::from_value(value).map(DatasetRow::Core)
        }
        .map_err(|e| e.to_string())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DatasetRow::Core(_) => "core",
            DatasetRow::Expanded(r) => match r.formulation_kind {
                FormulationKind::Core => "core",
                FormulationKind::Paraphrase => "paraphrase",
            },
        }
    }

    /// Instruction text for core-format rows.
    pub fn core_instruction(&self) -> Option<&str> {
        match self {
            DatasetRow::Core(r) => Some(&r.instruction),
            DatasetRow::Expanded(r) if r.formulation_kind == FormulationKind::Core => Some(&r.task_text),
            DatasetRow::Expanded(_) => None,
        }
    }

    pub fn input(&self) -> &str {
        match self {
            DatasetRow::Core(r) => &r.input,
            DatasetRow::Expanded(r) => &r.input,
        }
    }

    pub fn output(&self) -> &str {
        match self {
            DatasetRow::Core(r) => &r.output,
            DatasetRow::Expanded(r) => &r.output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedRecord {
    /// 1-based line number.
    pub line: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedDataset {
    pub rows: Vec<DatasetRow>,
    pub malformed: Vec<MalformedRecord>,
}

/// Parses JSONL, skipping blank lines and collecting malformed ones.
pub fn parse_dataset(text: &str) -> ParsedDataset {
    let mut out = ParsedDataset::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match DatasetRow::parse(line) {
            Ok(row) => out.rows.push(row),
            Err(error) => out.malformed.push(MalformedRecord { line: i + 1, error }),
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStats {
    pub instructions: usize,
    /// Inputs per instruction mapped to how many instructions have that many.
    pub size_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintStats {
    pub records_with_field: usize,
    pub no_constraints: usize,
    pub no_constraint_prevalence: f64,
}

/// Word-count histogram with buckets of [`LENGTH_BUCKET_WORDS`] words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub bucket_words: usize,
    pub counts: Vec<usize>,
}

impl Default for LengthHistogram {
    fn default() -> Self {
        Self {
            bucket_words: LENGTH_BUCKET_WORDS,
            counts: Vec::new(),
        }
    }
}

impl LengthHistogram {
    fn add(&mut self, text: &str) {
        let b = text.split_whitespace().count() / self.bucket_words;
        if self.counts.len() <= b {
            self.counts.resize(b + 1, 0);
        }
        self.counts[b] += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthStats {
    pub instruction: LengthHistogram,
    pub input: LengthHistogram,
    pub output: LengthHistogram,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseStats {
    pub want: usize,
    pub instructions: usize,
    pub with_full_templates: usize,
    pub success_rate: f64,
    /// Paraphrase rows whose core example id matches no core-format row.
    pub orphans: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub records: usize,
    pub malformed: Vec<MalformedRecord>,
    pub by_kind: BTreeMap<String, usize>,
    pub instruction_groups: GroupStats,
    pub constraints: ConstraintStats,
    pub lengths: LengthStats,
    pub paraphrase: ParaphraseStats,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Descriptive statistics over a parsed dataset. `want` is the per-instruction
/// template count that counts as a paraphrase success.
pub fn dataset_stats(data: &ParsedDataset, want: usize) -> DatasetStats {
    let mut stats = DatasetStats {
        records: data.rows.len(),
        malformed: data.malformed.clone(),
        ..DatasetStats::default()
    };
    stats.paraphrase.want = want;

    let mut group_sizes: HashMap<&str, usize> = HashMap::new();
    let mut instruction_by_id: HashMap<&str, &str> = HashMap::new();
    let mut templates: HashMap<&str, HashSet<&str>> = HashMap::new();
    let mut expanded_instructions: HashSet<&str> = HashSet::new();

    for row in &data.rows {
        *stats.by_kind.entry(row.kind().to_string()).or_default() += 1;
        if let Some(instruction) = row.core_instruction() {
            *group_sizes.entry(instruction).or_default() += 1;
            stats.lengths.instruction.add(instruction);
        }
        stats.lengths.input.add(row.input());
        stats.lengths.output.add(row.output());
        match row {
            DatasetRow::Core(r) => {
                stats.constraints.records_with_field += 1;
                if is_no_constraints(&r.constraints) {
                    stats.constraints.no_constraints += 1;
                }
            }
            DatasetRow::Expanded(r) if r.formulation_kind == FormulationKind::Core => {
                instruction_by_id.insert(&r.core_example_id, &r.task_text);
                expanded_instructions.insert(&r.task_text);
            }
            DatasetRow::Expanded(_) => {}
        }
    }
    for row in &data.rows {
        if let DatasetRow::Expanded(r) = row {
            if r.formulation_kind != FormulationKind::Paraphrase {
                continue;
            }
            match instruction_by_id.get(r.core_example_id.as_str()) {
                Some(instruction) => {
                    templates.entry(instruction).or_default().insert(&r.task_text);
                }
                None => stats.paraphrase.orphans += 1,
            }
        }
    }

    stats.instruction_groups.instructions = group_sizes.len();
    for size in group_sizes.values() {
        *stats.instruction_groups.size_histogram.entry(*size).or_default() += 1;
    }
    stats.constraints.no_constraint_prevalence =
        ratio(stats.constraints.no_constraints, stats.constraints.records_with_field);
    stats.paraphrase.instructions = expanded_instructions.len();
    stats.paraphrase.with_full_templates = expanded_instructions
        .iter()
        .filter(|i| templates.get(*i).map_or(0, HashSet::len) >= want)
        .count();
    stats.paraphrase.success_rate = ratio(stats.paraphrase.with_full_templates, stats.paraphrase.instructions);
    stats
}
