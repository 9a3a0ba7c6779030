use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Request shape sent to an OpenAI-compatible endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiStyle {
    /// `{"prompt": ...}` to a completions endpoint.
    #[default]
    Completions,
    /// `{"messages": [{"role": "user", "content": ...}]}`.
    Chat,
}

impl ApiStyle {
    pub fn default_response_path(self) -> &'static str {
        match self {
            ApiStyle::Completions => "choices.0.text",
            ApiStyle::Chat => "choices.0.message.content",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles on each further attempt.
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, attempt: u32) -> Duration {
        // attempt is 1-based; no delay before the first
        if attempt <= 1 {
            return Duration::ZERO;
        }
        Duration::from_millis(self.backoff_ms.saturating_mul(1 << (attempt - 2).min(16)))
    }
}

/// Settings for the HTTP completion backend. The auth token is never part
/// of the config; only the name of the environment variable holding it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub base_url: String,
    pub model_name: String,
    pub auth_token_env: Option<String>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub max_concurrency: usize,
    pub retry_policy: RetryPolicy,
    pub request_timeout_ms: u64,
    pub api_style: ApiStyle,
    /// Dot-separated path to the generated text in the response body;
    /// numeric segments index arrays. Defaults per `api_style`.
    pub response_path: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1/completions".into(),
            model_name: String::new(),
            auth_token_env: None,
            temperature: 0.0,
            max_output_tokens: 1024,
            max_concurrency: 4,
            retry_policy: RetryPolicy::default(),
            request_timeout_ms: 120_000,
            api_style: ApiStyle::default(),
            response_path: None,
        }
    }
}

impl BackendConfig {
    pub fn response_path(&self) -> &str {
        self.response_path
            .as_deref()
            .unwrap_or_else(|| self.api_style.default_response_path())
    }
}
