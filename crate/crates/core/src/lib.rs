//! Synthetic instruction dataset generation.
//!
//! A handful of seed demonstrations are wrapped in a few-shot prompt, a
//! language model invents new structured tasks, automatic filters clean the
//! stream, outputs are generated greedily, and each task is finally
//! paraphrased into free-form templates that are crossed with every input of
//! that task. Every model call goes through [`backend::CompletionBackend`], so
//! runs can be recorded once and replayed byte for byte.

pub mod analysis;
pub mod backend;
pub mod commands;
pub mod config;
pub mod expansion;
pub mod export;
pub mod par;
pub mod prompting;
pub mod structgen;
pub mod text;

pub use backend::{CompletionBackend, CompletionRequest, CompletionResult, DecodingParams};
pub use config::RunConfig;
pub use prompting::{Demonstration, PromptStyle, RephraseDemo, SeedSet};
pub use structgen::{CoreExample, StructuredCandidate};
