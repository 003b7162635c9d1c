//! Run configuration shared by every command.
//!
//! Defaults describe the main generation setup: enumeration meta-prompt, all
//! five seed sets, nucleus sampling (p = 0.99) for inputs, greedy decoding
//! for outputs, constraints used in both phases, two-step generation and two
//! paraphrases per instruction with at most five failed attempts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    BackendConfig, DecodingParams, DEFAULT_INPUT_MAX_TOKENS, DEFAULT_OUTPUT_MAX_TOKENS,
    DEFAULT_REPHRASE_MAX_TOKENS,
};
use crate::prompting::PromptStyle;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingConfig {
    /// Stop sequences left empty here are filled from the active meta-prompt.
    pub input: DecodingParams,
    pub output: DecodingParams,
    pub rephrase: DecodingParams,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Self {
            input: DecodingParams::nucleus(DEFAULT_INPUT_MAX_TOKENS),
            output: DecodingParams::greedy(DEFAULT_OUTPUT_MAX_TOKENS)
                .with_stop(vec!["\n\nInstruction:".into(), "\nExample ".into()]),
            rephrase: DecodingParams::nucleus(DEFAULT_REPHRASE_MAX_TOKENS).with_stop(vec!["\nExample ".into()]),
        }
    }
}

/// How failed paraphrase attempts are counted toward `max_attempts`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttemptAccounting {
    /// Every failed validation for the instruction counts.
    #[default]
    Total,
    /// The counter resets after each accepted formulation.
    Consecutive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpansionConfig {
    pub want: usize,
    pub max_attempts: usize,
    pub accounting: AttemptAccounting,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            want: 2,
            max_attempts: 5,
            accounting: AttemptAccounting::Total,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub output_dir: PathBuf,
    /// When set, calls are served from this replay fixture instead of HTTP.
    pub fixture: Option<PathBuf>,
    pub seed_sets: Option<PathBuf>,
    pub rephrase_demos: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub backend: BackendConfig,
    pub style: PromptStyle,
    pub seed_set_ids: Vec<u8>,
    pub target_core_examples: usize,
    /// Cap on input-generation calls; `None` means `10 * target + 10`.
    pub max_generation_calls: Option<u64>,
    pub decoding: DecodingConfig,
    pub constraints_in_input_gen: bool,
    pub constraints_in_output_gen: bool,
    pub one_step: bool,
    /// Keep outputs the backend cut off at `max_tokens`.
    pub keep_truncated: bool,
    pub expansion: ExpansionConfig,
    pub max_in_flight: usize,
    pub rng_seed: u64,
    pub similarity_pairs: usize,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: BackendConfig::default(),
            style: PromptStyle::Enumeration,
            seed_set_ids: vec![1, 2, 3, 4, 5],
            target_core_examples: 64_000,
            max_generation_calls: None,
            decoding: DecodingConfig::default(),
            constraints_in_input_gen: true,
            constraints_in_output_gen: true,
            one_step: false,
            keep_truncated: false,
            expansion: ExpansionConfig::default(),
            max_in_flight: 1,
            rng_seed: 0,
            similarity_pairs: 10_000,
            paths: PathsConfig {
                output_dir: PathBuf::from("out"),
                ..PathsConfig::default()
            },
        }
    }
}

impl RunConfig {
    /// Reads a config document. A run manifest (which embeds its config under
    /// `"config"`) is accepted as well, so any run can be repeated from it.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(raw)?;
        let config: RunConfig = match value.get("config") {
            Some(inner) if value.get("command").is_some() => serde_json::from_value(inner.clone())?,
            _ => serde_json::from_value(value)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seed_set_ids.is_empty() {
            return Err(ConfigError::Invalid("seed_set_ids is empty".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::Invalid("max_in_flight must be at least 1".into()));
        }
        for p in [&self.decoding.input, &self.decoding.output, &self.decoding.rephrase] {
            p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn generation_call_budget(&self) -> u64 {
        self.max_generation_calls
            .unwrap_or(10 * self.target_core_examples as u64 + 10)
    }

    /// Canonical JSON of this config (stable key order).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
