//! Prompt construction for every model call the pipeline makes.
//!
//! All rendering here is pure: the same arguments always produce the same
//! bytes. Lines end in `\n` and consecutive blocks are separated by exactly
//! one blank line. The wording that wraps the demonstrations (headers,
//! banners, trailing cues) lives in `data/meta_prompts.json` so it can be
//! swapped without touching code.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{canonical_constraints, is_no_constraints, INPUT_PLACEHOLDER};

const BUILTIN_SEED_SETS: &str = include_str!("../data/seed_sets.json");
const BUILTIN_REPHRASE_DEMOS: &str = include_str!("../data/rephrase_demos.json");
const BUILTIN_META_PROMPTS: &str = include_str!("../data/meta_prompts.json");

pub const INSTRUCTION_LABEL: &str = "Instruction:";
pub const INPUT_LABEL: &str = "Input:";
pub const CONSTRAINTS_LABEL: &str = "Constraints:";
pub const OUTPUT_LABEL: &str = "Output:";
pub const ALTERNATIVE_LABEL: &str = "Alternative formulation:";

/// Number of demonstrations in every seed set.
pub const DEMOS_PER_SEED: usize = 3;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("demonstration field `{field}` is empty")]
    EmptyField { field: &'static str },
    #[error("seed set {id} has {found} demonstrations, expected {DEMOS_PER_SEED}")]
    WrongDemoCount { id: u8, found: usize },
    #[error("seed set id {0} is outside 1..=5")]
    InvalidSeedId(u8),
    #[error("seed set {seed}: demonstration {index} has no output")]
    MissingOutput { seed: u8, index: usize },
    #[error("rephrase demo {index} does not contain the {INPUT_PLACEHOLDER} placeholder")]
    NoPlaceholder { index: usize },
    #[error("at least one rephrase demonstration is required")]
    NoRephraseDemos,
    #[error("target instruction is empty")]
    EmptyInstruction,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt prompt data: {0}")]
    Data(#[from] serde_json::Error),
}

/// One in-context example in the structured four-field format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub instruction: String,
    pub input: String,
    pub constraints: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Demonstration {
    /// Builds a validated demonstration; the constraints sentinel is canonicalized.
    pub fn new(
        instruction: impl Into<String>,
        input: impl Into<String>,
        constraints: impl Into<String>,
        output: Option<String>,
    ) -> Result<Self, PromptError> {
        let demo = Self {
            instruction: instruction.into(),
            input: input.into(),
            constraints: canonical_constraints(&constraints.into()),
            output,
        };
        demo.validate()?;
        Ok(demo)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.instruction.trim().is_empty() {
            return Err(PromptError::EmptyField { field: "instruction" });
        }
        if self.input.trim().is_empty() {
            return Err(PromptError::EmptyField { field: "input" });
        }
        if self.constraints.trim().is_empty() {
            return Err(PromptError::EmptyField { field: "constraints" });
        }
        Ok(())
    }

    pub fn has_constraints(&self) -> bool {
        !is_no_constraints(&self.constraints)
    }
}

/// An ordered triple of demonstrations used together in one generation prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub id: u8,
    pub demos: Vec<Demonstration>,
}

impl SeedSet {
    pub fn new(id: u8, demos: Vec<Demonstration>) -> Result<Self, PromptError> {
        let set = Self { id, demos };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if !(1..=5).contains(&self.id) {
            return Err(PromptError::InvalidSeedId(self.id));
        }
        if self.demos.len() != DEMOS_PER_SEED {
            return Err(PromptError::WrongDemoCount {
                id: self.id,
                found: self.demos.len(),
            });
        }
        self.demos.iter().try_for_each(Demonstration::validate)
    }
}

/// The meta-prompt wrapping the demonstrations of a generation prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    Minimal,
    #[default]
    Enumeration,
    Verbose,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 3] = [Self::Minimal, Self::Enumeration, Self::Verbose];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Minimal => "minimal",
            Self::Enumeration => "enumeration",
            Self::Verbose => "verbose",
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minimal" => Ok(Self::Minimal),
            "enumeration" => Ok(Self::Enumeration),
            "verbose" => Ok(Self::Verbose),
            other => Err(format!(
                "unknown prompt style `{other}` (expected minimal, enumeration or verbose)"
            )),
        }
    }
}

/// An instruction paired with a free-form rewrite containing `{INPUT}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RephraseDemo {
    pub instruction: String,
    pub alternative: String,
}

/// Fixed wording of one meta-prompt style.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPrompt {
    /// Paragraph placed before the first demonstration.
    pub header: Option<String>,
    /// Per-demonstration banner; `{k}` is replaced by the 1-based position.
    pub banner: Option<String>,
    /// Text after the last demonstration that invites a new example.
    pub cue: String,
    /// Prepended to a completion before parsing, for cues that open a field.
    pub completion_prefix: String,
    /// Stop sequences for input generation under this style.
    pub stop: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPrompts {
    pub minimal: MetaPrompt,
    pub enumeration: MetaPrompt,
    pub verbose: MetaPrompt,
}

impl MetaPrompts {
    pub fn builtin() -> &'static MetaPrompts {
        static CELL: std::sync::OnceLock<MetaPrompts> = std::sync::OnceLock::new();
        CELL.get_or_init(|| {
            serde_json::from_str(BUILTIN_META_PROMPTS).expect("bundled meta_prompts.json is valid")
        })
    }

    pub fn get(&self, style: PromptStyle) -> &MetaPrompt {
        match style {
            PromptStyle::Minimal => &self.minimal,
            PromptStyle::Enumeration => &self.enumeration,
            PromptStyle::Verbose => &self.verbose,
        }
    }
}

#[derive(Clone, Copy)]
struct BlockFields {
    constraints: bool,
    output: bool,
}

fn push_demo_block(out: &mut String, meta: &MetaPrompt, k: usize, demo: &Demonstration, f: BlockFields) {
    if let Some(banner) = &meta.banner {
        out.push_str(&banner.replace("{k}", &k.to_string()));
        out.push('\n');
    }
    push_field(out, INSTRUCTION_LABEL, &demo.instruction);
    push_field(out, INPUT_LABEL, &demo.input);
    if f.constraints {
        push_field(out, CONSTRAINTS_LABEL, &demo.constraints);
    }
    if f.output {
        push_field(out, OUTPUT_LABEL, demo.output.as_deref().unwrap_or_default());
    }
}

fn push_field(out: &mut String, label: &str, value: &str) {
    out.push_str(label);
    out.push(' ');
    out.push_str(value);
    out.push('\n');
}

impl MetaPrompt {
    fn render(&self, seed: &SeedSet, fields: BlockFields) -> String {
        let mut out = String::new();
        if let Some(header) = &self.header {
            out.push_str(header);
            out.push_str("\n\n");
        }
        for (i, demo) in seed.demos.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            push_demo_block(&mut out, self, i + 1, demo, fields);
        }
        out.push('\n');
        out.push_str(&self.cue);
        out
    }

    /// One demo block as it appears at position `k` of a prompt.
    pub fn render_demo(&self, k: usize, demo: &Demonstration, include_output: bool) -> String {
        let mut out = String::new();
        push_demo_block(
            &mut out,
            self,
            k,
            demo,
            BlockFields {
                constraints: true,
                output: include_output,
            },
        );
        out
    }

    pub fn render_generation(&self, seed: &SeedSet, include_constraints: bool) -> Result<String, PromptError> {
        seed.validate()?;
        Ok(self.render(
            seed,
            BlockFields {
                constraints: include_constraints,
                output: false,
            },
        ))
    }

    pub fn render_one_step(&self, seed: &SeedSet) -> Result<String, PromptError> {
        seed.validate()?;
        for (index, demo) in seed.demos.iter().enumerate() {
            if demo.output.as_deref().is_none_or(|o| o.trim().is_empty()) {
                return Err(PromptError::MissingOutput { seed: seed.id, index });
            }
        }
        Ok(self.render(
            seed,
            BlockFields {
                constraints: true,
                output: true,
            },
        ))
    }
}

/// Few-shot prompt asking the model for a fourth structured example.
pub fn render_generation_prompt(
    seed: &SeedSet,
    style: PromptStyle,
    include_constraints: bool,
) -> Result<String, PromptError> {
    MetaPrompts::builtin()
        .get(style)
        .render_generation(seed, include_constraints)
}

/// Generation prompt whose demonstrations also carry their outputs.
pub fn render_one_step_prompt(seed: &SeedSet, style: PromptStyle) -> Result<String, PromptError> {
    MetaPrompts::builtin().get(style).render_one_step(seed)
}

/// Prompt for producing the output of one generated example.
///
/// The constraints line is dropped when `use_constraints` is off or the
/// constraints are the `None.` sentinel.
pub fn render_output_prompt(
    instruction: &str,
    input: &str,
    constraints: &str,
    use_constraints: bool,
) -> String {
    let mut out = String::new();
    push_field(&mut out, INSTRUCTION_LABEL, instruction);
    push_field(&mut out, INPUT_LABEL, input);
    if use_constraints && !is_no_constraints(constraints) {
        push_field(&mut out, CONSTRAINTS_LABEL, constraints);
    }
    out.push_str(OUTPUT_LABEL);
    out
}

/// Prompt asking for an alternative formulation of `instruction`.
pub fn render_rephrase_prompt(demos: &[RephraseDemo], instruction: &str) -> Result<String, PromptError> {
    if demos.is_empty() {
        return Err(PromptError::NoRephraseDemos);
    }
    if instruction.trim().is_empty() {
        return Err(PromptError::EmptyInstruction);
    }
    if let Some(index) = demos.iter().position(|d| !d.alternative.contains(INPUT_PLACEHOLDER)) {
        return Err(PromptError::NoPlaceholder { index });
    }
    let mut out = String::new();
    for (i, demo) in demos.iter().enumerate() {
        out.push_str(&format!("Example {}\n", i + 1));
        push_field(&mut out, INSTRUCTION_LABEL, &demo.instruction);
        push_field(&mut out, INPUT_LABEL, INPUT_PLACEHOLDER);
        push_field(&mut out, ALTERNATIVE_LABEL, &demo.alternative);
        out.push('\n');
    }
    out.push_str(&format!("Example {}\n", demos.len() + 1));
    push_field(&mut out, INSTRUCTION_LABEL, instruction);
    push_field(&mut out, INPUT_LABEL, INPUT_PLACEHOLDER);
    out.push_str(ALTERNATIVE_LABEL);
    Ok(out)
}

fn validated_seed_sets(sets: Vec<SeedSet>) -> Result<Vec<SeedSet>, PromptError> {
    let sets: Vec<SeedSet> = sets
        .into_iter()
        .map(|mut s| {
            for d in &mut s.demos {
                d.constraints = canonical_constraints(&d.constraints);
            }
            s
        })
        .collect();
    sets.iter().try_for_each(SeedSet::validate)?;
    Ok(sets)
}

/// Parses a seed-set JSON document and validates every set.
pub fn parse_seed_sets(json: &str) -> Result<Vec<SeedSet>, PromptError> {
    validated_seed_sets(serde_json::from_str(json)?)
}

pub fn load_seed_sets(path: &Path) -> Result<Vec<SeedSet>, PromptError> {
    let json = read(path)?;
    parse_seed_sets(&json)
}

/// The five bundled seed sets, ids 1 through 5.
pub fn builtin_seed_sets() -> Result<Vec<SeedSet>, PromptError> {
    parse_seed_sets(BUILTIN_SEED_SETS)
}

pub fn parse_rephrase_demos(json: &str) -> Result<Vec<RephraseDemo>, PromptError> {
    let demos: Vec<RephraseDemo> = serde_json::from_str(json)?;
    if demos.is_empty() {
        return Err(PromptError::NoRephraseDemos);
    }
    if let Some(index) = demos.iter().position(|d| !d.alternative.contains(INPUT_PLACEHOLDER)) {
        return Err(PromptError::NoPlaceholder { index });
    }
    Ok(demos)
}

pub fn load_rephrase_demos(path: &Path) -> Result<Vec<RephraseDemo>, PromptError> {
    parse_rephrase_demos(&read(path)?)
}

pub fn builtin_rephrase_demos() -> Result<Vec<RephraseDemo>, PromptError> {
    parse_rephrase_demos(BUILTIN_REPHRASE_DEMOS)
}

fn read(path: &Path) -> Result<String, PromptError> {
    std::fs::read_to_string(path).map_err(|source| PromptError::Io {
        path: path.display().to_string(),
        source,
    })
}
