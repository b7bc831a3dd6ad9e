//! Blocking client for chat-completions-compatible endpoints.
//!
//! One request carries a single user message (plus an optional system
//! message). The first choice's `message.content` is returned untouched.
//! Connection failures, HTTP 429 and 5xx responses are retried with
//! exponential backoff: the k-th retry waits `retry_backoff_base_ms · 2^(k-1)`.

mod mock;

use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use mock::{MockEndpoint, MockReply, RecordedRequest};

pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";
pub const ONE_SHOT_MAX_TOKENS: u32 = 16;
pub const FEW_SHOT_MAX_TOKENS: u32 = 2048;
pub const MAX_TEMPERATURE: f64 = 2.0;
pub const MAX_RETRIES_LIMIT: u32 = 10;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("temperature {0} outside the accepted range [0, 2]")]
    InvalidTemperature(f64),
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("API key not found in environment variable {0}")]
    MissingApiKey(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request failed after {attempts} attempts (last status: {last_status:?}): {message}")]
    RetriesExhausted {
        attempts: u32,
        last_status: Option<u16>,
        message: String,
    },
    #[error("unexpected response payload: {0}")]
    BadPayload(String),
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}
fn default_timeout_ms() -> u64 {
    60_000
}
fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    1_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_id: String,
    #[serde(default = "default_key_env")]
    pub api_key_env_var: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_base_ms: u64,
    #[serde(default)]
    pub system_prompt: Option<String>,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model_id: model_id.into(),
            api_key_env_var: default_key_env(),
            timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            retry_backoff_base_ms: default_backoff_ms(),
            system_prompt: None,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(ClientError::Config(format!(
                "base_url must be an http(s) URL, got {:?}",
                self.base_url
            )));
        }
        if self.timeout_ms == 0 {
            return Err(ClientError::Config("timeout_ms must be positive".into()));
        }
        if self.max_retries > MAX_RETRIES_LIMIT {
            return Err(ClientError::Config(format!(
                "max_retries must be at most {MAX_RETRIES_LIMIT}"
            )));
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64 << (retry.saturating_sub(1)).min(20);
        Duration::from_millis(self.retry_backoff_base_ms.saturating_mul(factor))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    pub fn new(prompt_text: impl Into<String>, temperature: f64, max_output_tokens: u32) -> Self {
        CompletionRequest {
            prompt_text: prompt_text.into(),
            temperature,
            max_output_tokens,
        }
    }
}

pub fn validate_temperature(t: f64) -> Result<(), ClientError> {
    if (0.0..=MAX_TEMPERATURE).contains(&t) {
        Ok(())
    } else {
        Err(ClientError::InvalidTemperature(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub raw_text: String,
    pub latency: Duration,
    /// Retries spent before the successful attempt.
    pub retries: u32,
}

pub struct LlmClient {
    config: EndpointConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl LlmClient {
    /// Reads the API key from the environment variable named in the config.
    pub fn from_env(config: EndpointConfig) -> Result<Self, ClientError> {
        let key = std::env::var(&config.api_key_env_var)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ClientError::MissingApiKey(config.api_key_env_var.clone()))?;
        Self::with_api_key(config, key)
    }

    pub fn with_api_key(config: EndpointConfig, api_key: impl Into<String>) -> Result<Self, ClientError> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        Ok(LlmClient {
            config,
            api_key: api_key.into(),
            agent,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn request_body(&self, request: &CompletionRequest) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &self.config.system_prompt {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": request.prompt_text}));
        json!({
            "model": self.config.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<Completion, ClientError> {
        validate_temperature(request.temperature)?;
        let body = self.request_body(request);
        let url = self.config.completions_url();
        let started = Instant::now();
        let mut retries = 0;
        loop {
            let attempt = self
                .agent
                .post(&url)
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(&body);

            let (retryable_status, message) = match attempt {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| ClientError::BadPayload(e.to_string()))?;
                    if (200..300).contains(&status) {
                        return Ok(Completion {
                            raw_text: extract_content(&text)?,
                            latency: started.elapsed(),
                            retries,
                        });
                    }
                    if status != 429 && status < 500 {
                        return Err(ClientError::Http { status, body: text });
                    }
                    (Some(status), format!("HTTP {status}"))
                }
                Err(e) => (None, e.to_string()),
            };

            if retries >= self.config.max_retries {
                return Err(ClientError::RetriesExhausted {
                    attempts: retries + 1,
                    last_status: retryable_status,
                    message,
                });
            }
            retries += 1;
            log::warn!("{message}; retry {retries} of {}", self.config.max_retries);
            thread::sleep(self.config.backoff(retries));
        }
    }
}

/// Sends one request, reading the API key from the configured variable.
/// Temperature is checked before anything else, so an out-of-range value
/// never reaches the network.
pub fn complete(config: &EndpointConfig, request: &CompletionRequest) -> Result<Completion, ClientError> {
    validate_temperature(request.temperature)?;
    LlmClient::from_env(config.clone())?.complete(request)
}

fn extract_content(body: &str) -> Result<String, ClientError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ClientError::BadPayload(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| ClientError::BadPayload("missing choices[0].message.content".into()))
}
