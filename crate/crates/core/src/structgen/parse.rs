use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::{CONSTRAINTS_LABEL, INPUT_LABEL, INSTRUCTION_LABEL, OUTPUT_LABEL};
use crate::text::canonical_constraints;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Instruction,
    Input,
    Constraints,
    Output,
}

impl Field {
    const ORDER: [Field; 4] = [Self::Instruction, Self::Input, Self::Constraints, Self::Output];

    pub fn label(self) -> &'static str {
        match self {
            Self::Instruction => INSTRUCTION_LABEL,
            Self::Input => INPUT_LABEL,
            Self::Constraints => CONSTRAINTS_LABEL,
            Self::Output => OUTPUT_LABEL,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Instruction => "Instruction",
            Self::Input => "Input",
            Self::Constraints => "Constraints",
            Self::Output => "Output",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("completion is missing the {0} field")]
    MissingField(Field),
}

/// Field values of the first labeled block in a completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFields {
    pub instruction: String,
    pub input: String,
    pub constraints: String,
    pub output: Option<String>,
}

fn is_banner(line: &str) -> bool {
    let t = line.trim();
    t.strip_prefix("Example ")
        .is_some_and(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()))
}

fn label_of(line: &str) -> Option<(Field, &str)> {
    Field::ORDER
        .iter()
        .find_map(|&f| line.strip_prefix(f.label()).map(|rest| (f, rest)))
}

/// Extracts the first block of `Instruction:` / `Input:` / `Constraints:`
/// (and `Output:` when `expect_output`) fields from model text.
///
/// Leading banners and stray lines before the first label are skipped. A
/// field runs until the next label line. The block ends at an `Example k`
/// banner, at a label seen a second time, or at a blank line once every
/// required field is present; anything after that is ignored.
pub fn parse_structured_completion(text: &str, expect_output: bool) -> Result<ParsedFields, ParseError> {
    let required: &[Field] = if expect_output {
        &Field::ORDER
    } else {
        &Field::ORDER[..3]
    };
    let mut values: [Option<Vec<&str>>; 4] = Default::default();
    let mut current: Option<usize> = None;

    for line in text.lines() {
        if is_banner(line) {
            if current.is_some() {
                break;
            }
            continue;
        }
        if let Some((field, rest)) = label_of(line.trim_start()) {
            if field == Field::Output && !expect_output {
                break;
            }
            let idx = field as usize;
            if values[idx].is_some() {
                break;
            }
            values[idx] = Some(vec![rest]);
            current = Some(idx);
            continue;
        }
        let Some(idx) = current else {
            continue;
        };
        if line.trim().is_empty() && required.iter().all(|f| values[*f as usize].is_some()) {
            break;
        }
        values[idx].as_mut().expect("current field is open").push(line);
    }

    let mut take = |f: Field| -> Result<String, ParseError> {
        let joined = values[f as usize]
            .take()
            .map(|lines| lines.join("\n"))
            .unwrap_or_default();
        let value = joined.trim();
        if value.is_empty() {
            Err(ParseError::MissingField(f))
        } else {
            Ok(value.to_string())
        }
    };
    let instruction = take(Field::Instruction)?;
    let input = take(Field::Input)?;
    let constraints = canonical_constraints(&take(Field::Constraints)?);
    let output = if expect_output {
        Some(take(Field::Output)?)
    } else {
        None
    };
    Ok(ParsedFields {
        instruction,
        input,
        constraints,
        output,
    })
}
