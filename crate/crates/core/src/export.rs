//! Dataset export: raw record passthrough or `{source, target}` training pairs.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{parse_dataset, DatasetRow, MalformedRecord};
use crate::expansion::core_task_text;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    RawJsonl,
    #[default]
    TrainingJsonl,
}

impl FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw_jsonl" | "raw" => Ok(Self::RawJsonl),
            "training_jsonl" | "training" => Ok(Self::TrainingJsonl),
            other => Err(format!("unknown export format {other:?}; expected raw_jsonl or training_jsonl")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub source: String,
    pub target: String,
}

/// Core-format rows use the labeled instruction and input layout;
/// paraphrase rows pass their rendered task through unchanged.
pub fn training_pair(row: &DatasetRow) -> TrainingPair {
    let source = match row {
        DatasetRow::Core(r) => core_task_text(&r.instruction, &r.input),
        DatasetRow::Expanded(r) => r.rendered_task.clone(),
    };
    TrainingPair {
        source,
        target: row.output().to_string(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Export {
    pub jsonl: String,
    pub records: usize,
    pub malformed: Vec<MalformedRecord>,
}

pub fn export_dataset(text: &str, format: ExportFormat) -> Export {
    let parsed = parse_dataset(text);
    let mut jsonl = String::new();
    for row in &parsed.rows {
        let line = match (format, row) {
            (ExportFormat::TrainingJsonl, row) => serde_json::to_string(&training_pair(row)),
            (ExportFormat::RawJsonl, DatasetRow::Core(r)) => serde_json::to_string(r),
            (ExportFormat::RawJsonl, DatasetRow::Expanded(r)) => serde_json::to_string(r),
        }
        .expect("record serializes");
        jsonl.push_str(&line);
        jsonl.push('\n');
    }
    Export {
        jsonl,
        records: parsed.rows.len(),
        malformed: parsed.malformed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{ExpandedRecord, FormulationKind};
    use crate::structgen::{CoreRecord, Provenance};

    #[test]
    fn core_and_paraphrase_sources() {
        let core = DatasetRow::Core(CoreRecord {
            id: "core-000001".into(),
            instruction: "Add the numbers.".into(),
            input: "2, 3".into(),
            constraints: "None.".into(),
            output: "5".into(),
            provenance: Provenance::default(),
        });
        let p = training_pair(&core);
        assert_eq!(p.source, "Instruction: Add the numbers.\nInput: 2, 3");
        assert_eq!(p.target, "5");

        let para = DatasetRow::Expanded(ExpandedRecord {
            id: "full-000002".into(),
            formulation_kind: FormulationKind::Paraphrase,
            task_text: "What is {INPUT} summed?".into(),
            input: "2, 3".into(),
            rendered_task: "What is 2, 3 summed?".into(),
            output: "5".into(),
            core_example_id: "core-000001".into(),
            template_attempt: Some(1),
        });
        assert_eq!(training_pair(&para).source, "What is 2, 3 summed?");
    }

    #[test]
    fn formats_parse() {
        assert_eq!("raw_jsonl".parse(), Ok(ExportFormat::RawJsonl));
        assert_eq!("training_jsonl".parse(), Ok(ExportFormat::TrainingJsonl));
        assert!("csv".parse::<ExportFormat>().is_err());
    }
}
