use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{
    BackendConfig, BackendError, CompletionBackend, CompletionRequest, CompletionResult, DecodingMode,
    FinishReason, Usage,
};

/// Requests-per-minute limiter shared by all callers of one backend.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    /// `per_minute == 0` disables limiting.
    pub fn per_minute(per_minute: u32) -> Self {
        let capacity = f64::from(per_minute);
        Self {
            capacity,
            per_second: capacity / 60.0,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Blocks until a request token is available.
    pub fn acquire(&self) {
        if self.capacity == 0.0 {
            return;
        }
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("token bucket poisoned");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.per_second).min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                (1.0 - *tokens) / self.per_second
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Client for a completions-style endpoint (`POST {model, prompt, ...}` in,
/// `choices[0].text` out) with bearer auth, retries and rate limiting.
pub struct HttpBackend {
    config: BackendConfig,
    token: Option<String>,
    agent: ureq::Agent,
    limiter: TokenBucket,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .field("has_token", &self.token.is_some())
            .finish()
    }
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        let token = std::env::var(&config.auth_token_env_var).ok().filter(|t| !t.is_empty());
        Ok(Self::with_token(config, token))
    }

    /// Like [`HttpBackend::new`] but fails when the token variable is unset.
    pub fn require_token(config: BackendConfig) -> Result<Self, BackendError> {
        let backend = Self::new(config)?;
        if backend.token.is_none() {
            return Err(BackendError::MissingToken(backend.config.auth_token_env_var.clone()));
        }
        Ok(backend)
    }

    fn with_token(config: BackendConfig, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = TokenBucket::per_minute(config.requests_per_minute);
        Self {
            config,
            token,
            agent,
            limiter,
        }
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// The JSON body sent for `request`; identical across retries.
    pub fn request_body(&self, request: &CompletionRequest) -> String {
        let p = &request.params;
        let mut body = json!({
            "model": self.config.model_name,
            "prompt": request.prompt,
            "max_tokens": p.max_tokens,
            "n": 1,
        });
        let obj = body.as_object_mut().expect("object literal");
        match p.mode {
            DecodingMode::Nucleus => {
                obj.insert("temperature".into(), json!(1.0));
                obj.insert("top_p".into(), json!(p.top_p));
            }
            DecodingMode::Greedy => {
                obj.insert("temperature".into(), json!(0.0));
            }
        }
        if !p.stop.is_empty() {
            obj.insert("stop".into(), json!(p.stop));
        }
        body.to_string()
    }

    fn send_once(&self, body: &str) -> Result<(u16, String), String> {
        let mut req = self
            .agent
            .post(&self.config.endpoint_url)
            .header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp
            .into_body()
            .read_to_string()
            .map_err(|e| format!("reading body: {e}"))?;
        Ok((status, text))
    }
}

/// Extracts `choices[0]` text, finish reason and usage from a response body.
pub(crate) fn parse_completion_body(body: &str) -> Result<CompletionResult, BackendError> {
    let v: Value = serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| BackendError::MalformedResponse("missing choices[0]".into()))?;
    let text = choice
        .get("text")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::MalformedResponse("missing choices[0].text".into()))?;
    let finish_reason = FinishReason::from_wire(choice.get("finish_reason").and_then(Value::as_str));
    let usage = v.get("usage").map_or(Usage::default(), |u| Usage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64).unwrap_or(0),
    });
    Ok(CompletionResult {
        text: text.to_string(),
        finish_reason,
        usage,
    })
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        request.validate()?;
        let body = self.request_body(request);
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = self.config.min_retry_backoff() * 2u32.saturating_pow(attempt - 1);
                thread::sleep(backoff);
            }
            self.limiter.acquire();
            match self.send_once(&body) {
                Ok((200..=299, text)) => return parse_completion_body(&text),
                Ok((status @ (401 | 403), _)) => return Err(BackendError::Auth { status }),
                Ok((status, text)) => {
                    let err = BackendError::Http { status, body: text };
                    if !err.is_transient() {
                        return Err(err);
                    }
                    last = err.to_string();
                }
                // transport-level failure
                Err(e) => last = e,
            }
        }
        Err(BackendError::RetriesExhausted { attempts, last })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::DecodingParams;

    #[test]
    fn parses_completion_body() {
        let body = r#"{"choices":[{"text":" hello","finish_reason":"length"}],"usage":{"prompt_tokens":3,"completion_tokens":1}}"#;
        let r = parse_completion_body(body).unwrap();
        assert_eq!(r.text, " hello");
        assert_eq!(r.finish_reason, FinishReason::Length);
        assert_eq!(r.usage.prompt_tokens, 3);
    }

    #[test]
    fn malformed_body() {
        assert!(matches!(parse_completion_body("nope"), Err(BackendError::MalformedResponse(_))));
        assert!(matches!(
            parse_completion_body(r#"{"choices":[]}"#),
            Err(BackendError::MalformedResponse(_))
        ));
    }

    #[test]
    fn body_fields_follow_decoding_mode() {
        let backend = HttpBackend::with_token(BackendConfig::default(), None);
        let nucleus = CompletionRequest::new("p", DecodingParams::nucleus(5).with_stop(vec!["\nExample ".into()]));
        let v: Value = serde_json::from_str(&backend.request_body(&nucleus)).unwrap();
        assert_eq!(v["top_p"], json!(0.99));
        assert_eq!(v["stop"][0], "\nExample ");
        assert_eq!(v["model"], "text-davinci-002");
        let greedy = CompletionRequest::new("p", DecodingParams::greedy(5));
        let v: Value = serde_json::from_str(&backend.request_body(&greedy)).unwrap();
        assert_eq!(v["temperature"], json!(0.0));
        assert!(v.get("top_p").is_none());
        assert!(v.get("stop").is_none());
    }

    #[test]
    fn unlimited_bucket_never_blocks() {
        let bucket = TokenBucket::per_minute(0);
        for _ in 0..1000 {
            bucket.acquire();
        }
    }
}
