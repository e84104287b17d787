//! Text-completion providers: live HTTP, transcript replay, scripted
//! responses, and a recorder that captures exchanges into a transcript.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no transcript entry for prompt hash {0}")]
    MissingTranscriptEntry(String),
    #[error("scripted provider ran out of responses")]
    ScriptExhausted,
    #[error("provider failed after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl ProviderError {
    /// Errors worth retrying.
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub system: String,
    pub prompt: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ProviderRequest {
    pub fn hash(&self) -> String {
        prompt_hash(&self.system, &self.prompt)
    }
}

/// Hex SHA-256 of `system`, a NUL byte, and `prompt`.
pub fn prompt_hash(system: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderExchange {
    pub prompt_hash: String,
    pub request: ProviderRequest,
    pub response: String,
    pub latency_ms: u64,
    pub provider: String,
}

pub trait Provider {
    fn id(&self) -> &str;
    fn complete(&mut self, req: &ProviderRequest) -> Result<String, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&mut self, req: &ProviderRequest) -> Result<String, ProviderError> {
        (**self).complete(req)
    }
}

/// Generation parameters and the retry policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    /// Environment variable holding the endpoint URL.
    pub endpoint_env: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_s: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            model: "gpt-4o".into(),
            temperature: 0.0,
            max_tokens: 2048,
            max_attempts: 3,
            backoff_ms: 500,
            endpoint_env: "VACFV_ENDPOINT".into(),
            api_key_env: "VACFV_API_KEY".into(),
            timeout_s: 120,
        }
    }
}

impl ProviderConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ProviderConfig, ProviderError> {
        let path = path.as_ref();
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ProviderError::Io { path: p.clone(), source })?;
        serde_json::from_str(&text).map_err(|source| ProviderError::Json { path: p, source })
    }

    pub fn request(&self, system: &str, prompt: &str) -> ProviderRequest {
        ProviderRequest {
            system: system.to_string(),
            prompt: prompt.to_string(),
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

/// Calls `p`, retrying transient failures with exponential backoff.
pub fn complete_with_retry(
    p: &mut dyn Provider,
    req: &ProviderRequest,
    cfg: &ProviderConfig,
) -> Result<String, ProviderError> {
    let attempts = cfg.max_attempts.max(1);
    let mut delay = Duration::from_millis(cfg.backoff_ms);
    for attempt in 1..=attempts {
        match p.complete(req) {
            Ok(r) => return Ok(r),
            Err(e) if e.is_transient() && attempt < attempts => {
                log::warn!("{} attempt {attempt} failed: {e}; retrying in {delay:?}", p.id());
                std::thread::sleep(delay);
                delay *= 2;
            }
            Err(e) if e.is_transient() => return Err(ProviderError::Exhausted { attempts, last: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop returns on the last attempt")
}

/// Answers from a recorded transcript, keyed by prompt hash.
#[derive(Clone, Debug, Default)]
pub struct ReplayProvider {
    responses: HashMap<String, String>,
}

impl ReplayProvider {
    /// The first exchange recorded for a hash wins.
    pub fn new(exchanges: impl IntoIterator<Item = ProviderExchange>) -> Self {
        let mut responses = HashMap::new();
        for e in exchanges {
            responses.entry(e.prompt_hash).or_insert(e.response);
        }
        ReplayProvider { responses }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        Ok(ReplayProvider::new(load_transcript(path)?))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Provider for ReplayProvider {
    fn id(&self) -> &str {
        "replay"
    }

    fn complete(&mut self, req: &ProviderRequest) -> Result<String, ProviderError> {
        let h = req.hash();
        self.responses.get(&h).cloned().ok_or(ProviderError::MissingTranscriptEntry(h))
    }
}

/// Returns canned responses in order, whatever the prompt.
#[derive(Clone, Debug, Default)]
pub struct ScriptedProvider {
    responses: VecDeque<String>,
}

impl ScriptedProvider {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        ScriptedProvider { responses: responses.into_iter().map(Into::into).collect() }
    }
}

impl Provider for ScriptedProvider {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&mut self, _req: &ProviderRequest) -> Result<String, ProviderError> {
        self.responses.pop_front().ok_or(ProviderError::ScriptExhausted)
    }
}

/// Wraps a provider and records every successful exchange.
pub struct RecordingProvider<P> {
    pub inner: P,
    pub exchanges: Vec<ProviderExchange>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        RecordingProvider { inner, exchanges: Vec::new() }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ProviderError> {
        save_transcript(path, &self.exchanges)
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn complete(&mut self, req: &ProviderRequest) -> Result<String, ProviderError> {
        let t = Instant::now();
        let response = self.inner.complete(req)?;
        self.exchanges.push(ProviderExchange {
            prompt_hash: req.hash(),
            request: req.clone(),
            response: response.clone(),
            latency_ms: t.elapsed().as_millis() as u64,
            provider: self.inner.id().to_string(),
        });
        Ok(response)
    }
}

pub fn load_transcript(path: impl AsRef<Path>) -> Result<Vec<ProviderExchange>, ProviderError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ProviderError::Io { path: p.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| ProviderError::Json { path: p, source })
}

pub fn save_transcript(path: impl AsRef<Path>, exchanges: &[ProviderExchange]) -> Result<(), ProviderError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let text = serde_json::to_string_pretty(exchanges).map_err(|source| ProviderError::Json { path: p.clone(), source })?;
    std::fs::write(path, text + "\n").map_err(|source| ProviderError::Io { path: p, source })
}

/// OpenAI-compatible chat-completions client. The endpoint and key come
/// from the environment variables named in the config.
pub struct HttpProvider {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn from_env(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let endpoint = std::env::var(&cfg.endpoint_env)
            .map_err(|_| ProviderError::Config(format!("environment variable {} is not set", cfg.endpoint_env)))?;
        let api_key = std::env::var(&cfg.api_key_env).ok();
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_s)))
            .build()
            .into();
        Ok(HttpProvider { endpoint, api_key, agent })
    }
}

impl Provider for HttpProvider {
    fn id(&self) -> &str {
        "http"
    }

    fn complete(&mut self, req: &ProviderRequest) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": req.model,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.prompt},
            ],
        });
        let mut call = self.agent.post(&self.endpoint);
        if let Some(k) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = call.send_json(&body).map_err(|e| ProviderError::Transport(e.to_string()))?;
        let v: serde_json::Value = resp.body_mut().read_json().map_err(|e| ProviderError::Transport(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Transport("response has no choices[0].message.content".into()))
    }
}
