//! Text-completion backends.
//!
//! Every model call goes through [`CompletionBackend`]. [`HttpBackend`] talks
//! to a completions-style HTTP service; [`ScriptedBackend`] and
//! [`ReplayBackend`] serve canned results so whole pipeline runs can be
//! reproduced offline. [`RecordingBackend`] wraps any backend and captures a
//! replay fixture.

mod http;
mod replay;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, TokenBucket};
pub use replay::{
    read_fixture, record_session, replay_session, write_fixture, FixtureRecord, RecordingBackend,
    ReplayBackend, ScriptedBackend,
};

pub const DEFAULT_TOP_P: f64 = 0.99;
pub const DEFAULT_INPUT_MAX_TOKENS: u32 = 512;
pub const DEFAULT_OUTPUT_MAX_TOKENS: u32 = 256;
pub const DEFAULT_REPHRASE_MAX_TOKENS: u32 = 256;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("auth token environment variable `{0}` is not set")]
    MissingToken(String),
    #[error("request failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("script exhausted")]
    ScriptExhausted,
    #[error("prompt hash mismatch: no recorded call for prompt {prompt_sha256} (sample {sample_index})")]
    PromptHashMismatch { prompt_sha256: String, sample_index: u64 },
    #[error("truncated or corrupt fixture at line {line}: {reason}")]
    TruncatedFixture { line: usize, reason: String },
    #[error("fixture not found: {0}")]
    FixtureNotFound(String),
    #[error("fixture i/o: {0}")]
    FixtureIo(#[from] std::io::Error),
}

impl BackendError {
    /// Transport failures, rate limiting and server errors are worth retrying.
    pub fn is_transient(&self) -> bool {
        matches!(self, Self::Http { status, .. } if *status == 429 || *status >= 500)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodingMode {
    Nucleus,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub mode: DecodingMode,
    pub top_p: f64,
    pub max_tokens: u32,
    #[serde(default)]
    pub stop: Vec<String>,
}

impl DecodingParams {
    /// Nucleus sampling with the default `top_p` of 0.99.
    pub fn nucleus(max_tokens: u32) -> Self {
        Self {
            mode: DecodingMode::Nucleus,
            top_p: DEFAULT_TOP_P,
            max_tokens,
            stop: Vec::new(),
        }
    }

    pub fn greedy(max_tokens: u32) -> Self {
        Self {
            mode: DecodingMode::Greedy,
            top_p: 1.0,
            max_tokens,
            stop: Vec::new(),
        }
    }

    pub fn with_stop(mut self, stop: Vec<String>) -> Self {
        self.stop = stop;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.mode == DecodingMode::Nucleus && !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(BackendError::InvalidRequest(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Connection settings for the HTTP backend. The auth token itself is never
/// stored here, only the name of the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub auth_token_env_var: String,
    pub request_timeout_ms: u64,
    pub max_retries: u32,
    pub min_retry_backoff_ms: u64,
    /// Token-bucket rate; 0 disables rate limiting.
    pub requests_per_minute: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/completions".into(),
            model_name: "text-davinci-002".into(),
            auth_token_env_var: "OPENAI_API_KEY".into(),
            request_timeout_ms: 60_000,
            max_retries: 5,
            min_retry_backoff_ms: 1_000,
            requests_per_minute: 60,
        }
    }
}

impl BackendConfig {
    pub fn request_timeout(&self) -> Duration {
        Duration::from_millis(self.request_timeout_ms)
    }

    pub fn min_retry_backoff(&self) -> Duration {
        Duration::from_millis(self.min_retry_backoff_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub params: DecodingParams,
    /// Ordinal distinguishing repeated samples of the same prompt. Not sent
    /// over the wire; replay uses it together with the prompt hash.
    #[serde(default)]
    pub sample_index: u64,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, params: DecodingParams) -> Self {
        Self {
            prompt: prompt.into(),
            params,
            sample_index: 0,
        }
    }

    pub fn with_sample_index(mut self, sample_index: u64) -> Self {
        self.sample_index = sample_index;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.prompt.is_empty() {
            return Err(BackendError::InvalidRequest("prompt is empty".into()));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Other,
}

impl FinishReason {
    pub fn from_wire(s: Option<&str>) -> Self {
        match s {
            Some("stop") | Some("stop_sequence") | Some("end_turn") => Self::Stop,
            Some("length") | Some("max_tokens") => Self::Length,
            _ => Self::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

/// A single completion; `text` never includes the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub finish_reason: FinishReason,
    pub usage: Usage,
}

impl CompletionResult {
    pub fn stop(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            finish_reason: FinishReason::Stop,
            usage: Usage::default(),
        }
    }
}

/// Anything that can turn a prompt into one completion.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError>;
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for &T {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).complete(request)
    }
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for Box<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).complete(request)
    }
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for Arc<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).complete(request)
    }
}

/// One-shot convenience over [`HttpBackend`].
pub fn complete(config: &BackendConfig, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
    HttpBackend::new(config.clone())?.complete(request)
}
