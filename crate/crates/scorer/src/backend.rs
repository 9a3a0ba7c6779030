//! Completion backends: an OpenAI-compatible HTTP client and a
//! deterministic stub keyed by prompt hash.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use revutil_core::rubric::{PromptBundle, PromptTask};
use revutil_core::Aspect;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ApiStyle, BackendConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {status}): {body}")]
    Auth { status: u16, body: String },
    #[error("environment variable {0} holding the API token is not set")]
    MissingToken(String),
    #[error("backend refused the request (HTTP {status}): {body}")]
    Refusal { status: u16, body: String },
    #[error("response has no text at {path:?}: {body}")]
    BadResponse { path: String, body: String },
    #[error("stub has no response for prompt {0}")]
    NoStubResponse(String),
}

impl BackendError {
    /// Errors that stop a whole batch rather than one item.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            BackendError::Auth { .. } | BackendError::MissingToken(_)
        )
    }
}

#[async_trait]
pub trait Backend: Send + Sync {
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, BackendError>;
}

/// Lowercase hex SHA-256 of the rendered prompt text.
pub fn prompt_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Follows a dot-separated path; numeric segments index arrays.
pub fn extract_path<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.')
        .filter(|s| !s.is_empty())
        .try_fold(value, |v, seg| match seg.parse::<usize>() {
            Ok(i) if v.is_array() => v.get(i),
            _ => v.get(seg),
        })
}

pub struct HttpBackend {
    cfg: BackendConfig,
    client: reqwest::Client,
}

impl HttpBackend {
    pub fn new(cfg: BackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(std::time::Duration::from_millis(cfg.request_timeout_ms))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self { cfg, client })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    fn body(&self, prompt: &str) -> Value {
        let mut body = json!({
            "model": self.cfg.model_name,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        });
        match self.cfg.api_style {
            ApiStyle::Completions => body["prompt"] = json!(prompt),
            ApiStyle::Chat => body["messages"] = json!([{"role": "user", "content": prompt}]),
        }
        body
    }

    fn token(&self) -> Result<Option<String>, BackendError> {
        match &self.cfg.auth_token_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| BackendError::MissingToken(var.clone())),
        }
    }

    /// One attempt. `Ok(Err(_))` is a transient failure worth retrying.
    async fn attempt(
        &self,
        body: &Value,
        token: Option<&str>,
    ) -> Result<Result<String, BackendError>, BackendError> {
        let mut req = self.client.post(&self.cfg.base_url).json(body);
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Ok(Err(BackendError::Transport(e.to_string()))),
        };
        let status = resp.status().as_u16();
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) => return Ok(Err(BackendError::Transport(e.to_string()))),
        };
        match status {
            200..=299 => {}
            401 | 403 => return Err(BackendError::Auth { status, body: text }),
            429 | 500..=599 => return Ok(Err(BackendError::Refusal { status, body: text })),
            _ => return Err(BackendError::Refusal { status, body: text }),
        }
        let path = self.cfg.response_path();
        let parsed: Value = serde_json::from_str(&text).map_err(|_| BackendError::BadResponse {
            path: path.to_string(),
            body: text.clone(),
        })?;
        match extract_path(&parsed, path).and_then(Value::as_str) {
            Some(s) => Ok(Ok(s.to_string())),
            None => Err(BackendError::BadResponse {
                path: path.to_string(),
                body: text,
            }),
        }
    }
}

#[async_trait]
impl Backend for HttpBackend {
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, BackendError> {
        let token = self.token()?;
        let body = self.body(&prompt.rendered_text);
        let attempts = self.cfg.retry_policy.max_attempts.max(1);
        let mut last = BackendError::Transport("no attempt made".into());
        for attempt in 1..=attempts {
            tokio::time::sleep(self.cfg.retry_policy.delay_before(attempt)).await;
            match self.attempt(&body, token.as_deref()).await? {
                Ok(text) => return Ok(text),
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "completion attempt failed");
                    last = e;
                }
            }
        }
        Err(last)
    }
}

/// A substring rule of the stub; unset filters match everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubRule {
    #[serde(default)]
    pub contains: Option<String>,
    #[serde(default)]
    pub task: Option<PromptTask>,
    #[serde(default)]
    pub aspect: Option<Aspect>,
    pub response: String,
}

impl StubRule {
    fn matches(&self, prompt: &PromptBundle) -> bool {
        self.contains
            .as_ref()
            .is_none_or(|s| prompt.rendered_text.contains(s.as_str()))
            && self.task.is_none_or(|t| t == prompt.task)
            && self.aspect.is_none_or(|a| prompt.aspects == [a])
    }
}

/// Stub fixture file: exact responses by prompt hash, then rules in order,
/// then an optional default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StubFixture {
    #[serde(default)]
    pub responses: HashMap<String, String>,
    #[serde(default)]
    pub rules: Vec<StubRule>,
    #[serde(default)]
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubCall {
    pub task: PromptTask,
    pub aspects: Vec<Aspect>,
    pub prompt_hash: String,
}

/// Deterministic backend for tests and offline runs. Records every call.
#[derive(Debug, Default)]
pub struct StubBackend {
    fixture: StubFixture,
    calls: Mutex<Vec<StubCall>>,
}

impl StubBackend {
    pub fn new(fixture: StubFixture) -> Self {
        Self {
            fixture,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn with_default(response: impl Into<String>) -> Self {
        Self::new(StubFixture {
            default: Some(response.into()),
            ..Default::default()
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        let fixture = serde_json::from_str(&text).map_err(std::io::Error::other)?;
        Ok(Self::new(fixture))
    }

    pub fn calls(&self) -> Vec<StubCall> {
        self.calls.lock().expect("stub call log").clone()
    }

    pub fn respond(&self, prompt: &PromptBundle) -> Result<String, BackendError> {
        let hash = prompt_hash(&prompt.rendered_text);
        self.calls.lock().expect("stub call log").push(StubCall {
            task: prompt.task,
            aspects: prompt.aspects.clone(),
            prompt_hash: hash.clone(),
        });
        if let Some(r) = self.fixture.responses.get(&hash) {
            return Ok(r.clone());
        }
        if let Some(rule) = self.fixture.rules.iter().find(|r| r.matches(prompt)) {
            return Ok(rule.response.clone());
        }
        self.fixture
            .default
            .clone()
            .ok_or(BackendError::NoStubResponse(hash))
    }
}

#[async_trait]
impl Backend for StubBackend {
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, BackendError> {
        self.respond(prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_extraction() {
        let v = json!({"choices": [{"text": "hi", "message": {"content": "yo"}}]});
        assert_eq!(extract_path(&v, "choices.0.text"), Some(&json!("hi")));
        assert_eq!(
            extract_path(&v, "choices.0.message.content"),
            Some(&json!("yo"))
        );
        assert_eq!(extract_path(&v, "choices.1.text"), None);
        assert_eq!(extract_path(&json!({"0": "k"}), "0"), Some(&json!("k")));
    }

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            prompt_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
