use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{
    BackendConfig, BackendError, CompletionBackend, CompletionRequest, CompletionResult, DecodingParams,
    FinishReason, HttpBackend, Usage,
};
use crate::text::sha256_hex;

/// One recorded call. Fixtures are JSONL files of these, one per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub prompt_sha256: String,
    #[serde(default)]
    pub sample_index: u64,
    pub params: DecodingParams,
    pub response_text: String,
    pub finish_reason: FinishReason,
    #[serde(default)]
    pub usage: Usage,
}

impl FixtureRecord {
    pub fn new(request: &CompletionRequest, result: &CompletionResult) -> Self {
        Self {
            prompt_sha256: sha256_hex(&request.prompt),
            sample_index: request.sample_index,
            params: request.params.clone(),
            response_text: result.text.clone(),
            finish_reason: result.finish_reason,
            usage: result.usage,
        }
    }

    fn result(&self) -> CompletionResult {
        CompletionResult {
            text: self.response_text.clone(),
            finish_reason: self.finish_reason,
            usage: self.usage,
        }
    }
}

pub fn read_fixture(path: &Path) -> Result<Vec<FixtureRecord>, BackendError> {
    let raw = match fs::read_to_string(path) {
        Ok(raw) => raw,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(BackendError::FixtureNotFound(path.display().to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    parse_fixture(&raw)
}

pub(crate) fn parse_fixture(raw: &str) -> Result<Vec<FixtureRecord>, BackendError> {
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| BackendError::TruncatedFixture {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn write_fixture(path: &Path, records: &[FixtureRecord]) -> Result<(), BackendError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::other)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

/// Serves a fixed queue of replies in order, ignoring the prompt.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<CompletionResult>>,
    seen: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedBackend {
    /// Each text becomes a reply with `finish_reason = stop`.
    pub fn new<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_results(texts.into_iter().map(CompletionResult::stop))
    }

    pub fn from_results(results: impl IntoIterator<Item = CompletionResult>) -> Self {
        Self {
            queue: Mutex::new(results.into_iter().collect()),
            seen: Mutex::new(Vec::new()),
        }
    }

    /// Requests received so far, in arrival order.
    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.seen.lock().expect("scripted backend poisoned").clone()
    }

    pub fn calls(&self) -> usize {
        self.seen.lock().expect("scripted backend poisoned").len()
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("scripted backend poisoned").len()
    }
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        request.validate()?;
        let mut queue = self.queue.lock().expect("scripted backend poisoned");
        self.seen.lock().expect("scripted backend poisoned").push(request.clone());
        queue.pop_front().ok_or(BackendError::ScriptExhausted)
    }
}

type ReplayKey = (String, u64);

/// Replays a recorded fixture, matching each request by prompt hash and
/// sample index. Repeated keys are served in recording order.
#[derive(Debug)]
pub struct ReplayBackend {
    entries: Mutex<HashMap<ReplayKey, VecDeque<CompletionResult>>>,
    total: usize,
}

impl ReplayBackend {
    pub fn from_records(records: Vec<FixtureRecord>) -> Self {
        let total = records.len();
        let mut entries: HashMap<ReplayKey, VecDeque<CompletionResult>> = HashMap::new();
        for r in records {
            entries
                .entry((r.prompt_sha256.clone(), r.sample_index))
                .or_default()
                .push_back(r.result());
        }
        Self {
            entries: Mutex::new(entries),
            total,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        Ok(Self::from_records(read_fixture(path)?))
    }

    pub fn total_entries(&self) -> usize {
        self.total
    }

    /// Recorded calls that have not been replayed.
    pub fn unused_entries(&self) -> usize {
        self.entries
            .lock()
            .expect("replay backend poisoned")
            .values()
            .map(VecDeque::len)
            .sum()
    }
}

impl CompletionBackend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        request.validate()?;
        let key = (sha256_hex(&request.prompt), request.sample_index);
        let mut entries = self.entries.lock().expect("replay backend poisoned");
        match entries.get_mut(&key) {
            Some(queue) => queue.pop_front().ok_or(BackendError::ScriptExhausted),
            None => Err(BackendError::PromptHashMismatch {
                prompt_sha256: key.0,
                sample_index: key.1,
            }),
        }
    }
}

/// Wraps a backend and keeps a [`FixtureRecord`] of every successful call.
#[derive(Debug)]
pub struct RecordingBackend<B> {
    inner: B,
    records: Mutex<Vec<FixtureRecord>>,
}

impl<B: CompletionBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            records: Mutex::new(Vec::new()),
        }
    }

    pub fn records(&self) -> Vec<FixtureRecord> {
        self.records.lock().expect("recorder poisoned").clone()
    }

    pub fn into_records(self) -> Vec<FixtureRecord> {
        self.records.into_inner().expect("recorder poisoned")
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: CompletionBackend> CompletionBackend for RecordingBackend<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let result = self.inner.complete(request)?;
        self.records
            .lock()
            .expect("recorder poisoned")
            .push(FixtureRecord::new(request, &result));
        Ok(result)
    }
}

/// Issues `requests` against the live endpoint and writes them as a fixture.
pub fn record_session(
    config: &BackendConfig,
    requests: &[CompletionRequest],
    fixture: &Path,
) -> Result<Vec<CompletionResult>, BackendError> {
    let recorder = RecordingBackend::new(HttpBackend::new(config.clone())?);
    let results = requests
        .iter()
        .map(|r| recorder.complete(r))
        .collect::<Result<Vec<_>, _>>()?;
    write_fixture(fixture, &recorder.into_records())?;
    Ok(results)
}

pub fn replay_session(fixture: &Path) -> Result<ReplayBackend, BackendError> {
    ReplayBackend::from_path(fixture)
}
