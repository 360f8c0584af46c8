//! Blocking client for `POST {base_url}/v1/chat/completions`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompt::{PromptBundle, Role, IMAGE_TOKEN};
use crate::rng;

use super::{CandidateRecipe, GenerateError, Generator};

pub const API_KEY_ENV: &str = "RAGKIT_API_KEY";
pub const MAX_RETRIES_LIMIT: u32 = 5;
const BACKOFF_CAP_MS: u64 = 5_000;

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_seed: Option<u64>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Base delay before the first retry; doubles per attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

impl GeneratorEndpointConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            temperature: 0.0,
            request_seed: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |m: String| Err(GenerateError::InvalidConfig(m));
        if self.base_url.trim().is_empty() {
            return bad("base_url is empty".into());
        }
        if self.max_retries > MAX_RETRIES_LIMIT {
            return bad(format!("max_retries {} exceeds {MAX_RETRIES_LIMIT}", self.max_retries));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad(format!("temperature {} is negative", self.temperature));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return bad("timeout_secs must be positive".into());
        }
        Ok(())
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

/// System message followed by the bundle's turns. The image placeholder,
/// when present, leads the first user message.
pub fn build_chat_request(cfg: &GeneratorEndpointConfig, bundle: &PromptBundle) -> ChatRequest {
    let mut messages = vec![ChatMessage { role: "system".into(), content: bundle.system_text.clone() }];
    let mut image_pending = bundle.image_ref.is_some();
    for turn in &bundle.turns {
        let mut content = turn.content();
        if image_pending && turn.role == Role::User {
            content = format!("{IMAGE_TOKEN}\n{content}");
            image_pending = false;
        }
        messages.push(ChatMessage { role: turn.role.as_str().into(), content });
    }
    ChatRequest {
        model: cfg.model_name.clone(),
        messages,
        temperature: cfg.temperature,
        seed: cfg.request_seed,
    }
}

/// SHA-256 (hex) of the request serialized with sorted keys. Used to key
/// replay transcripts.
pub fn request_hash(request: &ChatRequest) -> String {
    let value = serde_json::to_value(request).expect("request serializes");
    value_hash(&value)
}

pub(crate) fn value_hash(value: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug)]
pub struct RemoteGenerator {
    cfg: GeneratorEndpointConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl RemoteGenerator {
    /// Reads the bearer token from `RAGKIT_API_KEY` if set.
    pub fn new(cfg: GeneratorEndpointConfig) -> Result<Self, GenerateError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_api_key(cfg, key)
    }

    pub fn with_api_key(cfg: GeneratorEndpointConfig, api_key: Option<String>) -> Result<Self, GenerateError> {
        cfg.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| GenerateError::InvalidConfig(format!("http client: {e}")))?;
        Ok(Self { cfg, client, api_key })
    }

    pub fn config(&self) -> &GeneratorEndpointConfig {
        &self.cfg
    }

    fn backoff(&self, attempt: u32, jitter_seed: u64) -> Duration {
        let base = self.cfg.backoff_ms.saturating_mul(1u64 << attempt.min(16)).min(BACKOFF_CAP_MS);
        let mut stream = rng::stream(rng::derive_seed(jitter_seed, &["backoff", &attempt.to_string()]));
        let factor = 0.5 + 0.5 * rng::unit_f64(&mut stream);
        Duration::from_millis((base as f64 * factor) as u64)
    }

    /// Sends one request, retrying transport errors, 429 and 5xx.
    pub fn complete(&self, request: &ChatRequest) -> Result<String, GenerateError> {
        let attempts = self.cfg.max_retries + 1;
        let jitter_seed = rng::fnv1a64(request_hash(request).as_bytes());
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1, jitter_seed));
            }
            let mut req = self.client.post(self.cfg.endpoint()).json(request);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let resp = match req.send() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status();
            let body = resp.text().unwrap_or_default();
            if status.is_server_error() || status.as_u16() == 429 {
                last = format!("status {}", status.as_u16());
                continue;
            }
            if !status.is_success() {
                return Err(GenerateError::Status { status: status.as_u16(), body });
            }
            let parsed: ChatResponse = serde_json::from_str(&body).map_err(|e| GenerateError::Decode(e.to_string()))?;
            let content = parsed
                .choices
                .into_iter()
                .next()
                .and_then(|c| c.message.content)
                .unwrap_or_default();
            if content.trim().is_empty() {
                return Err(GenerateError::EmptyCompletion);
            }
            return Ok(content);
        }
        Err(GenerateError::Transport { attempts, last })
    }
}

impl Generator for RemoteGenerator {
    fn generate(&self, bundle: &PromptBundle, _seed: u64) -> Result<CandidateRecipe, GenerateError> {
        let rank = bundle.source_rank.ok_or(GenerateError::MissingRank)?;
        let request = build_chat_request(&self.cfg, bundle);
        let text = self.complete(&request)?;
        Ok(CandidateRecipe::from_text(text, rank))
    }
}

pub fn generate_remote(cfg: &GeneratorEndpointConfig, bundle: &PromptBundle) -> Result<CandidateRecipe, GenerateError> {
    RemoteGenerator::new(cfg.clone())?.generate(bundle, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_limits() {
        let mut c = GeneratorEndpointConfig::new("http://localhost:1", "m");
        assert!(c.validate().is_ok());
        c.max_retries = 6;
        assert!(c.validate().is_err());
        c.max_retries = 5;
        c.base_url = " ".into();
        assert!(c.validate().is_err());
        assert_eq!(
            GeneratorEndpointConfig::new("http://h:1/", "m").endpoint(),
            "http://h:1/v1/chat/completions"
        );
    }

    #[test]
    fn hash_ignores_key_order() {
        let req = ChatRequest {
            model: "m".into(),
            messages: vec![ChatMessage { role: "user".into(), content: "hi".into() }],
            temperature: 0.0,
            seed: Some(1),
        };
        let reordered: serde_json::Value = serde_json::from_str(
            r#"{"seed":1,"temperature":0.0,"messages":[{"content":"hi","role":"user"}],"model":"m"}"#,
        )
        .unwrap();
        assert_eq!(request_hash(&req), value_hash(&reordered));
    }
}
