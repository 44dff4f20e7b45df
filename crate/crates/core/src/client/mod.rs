//! Chat-completions client for vision models.
//!
//! Each [`PromptSequence`] becomes a single user message whose content parts
//! mirror the sequence: images as inline base64 `image_url` parts with the
//! configured detail level, text items as `text` parts. Completions are cached
//! on disk by a digest of everything that influences the answer, including the
//! run index, so repeated runs at temperature zero still get their own sample.

pub mod cache;
pub mod mock;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use base64::Engine as _;
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::blueprint::{PromptItem, PromptSequence};
use crate::error::{Error, Result};

pub use cache::{CacheRecord, ResponseCache};

pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageDetail {
    #[default]
    Low,
    High,
}

impl ImageDetail {
    fn as_str(&self) -> &'static str {
        match self {
            ImageDetail::Low => "low",
            ImageDetail::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Sleep before retry `i` is `backoff_ms[min(i, len - 1)]`.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            backoff_ms: vec![500, 1000, 2000, 4000],
        }
    }
}

impl RetryPolicy {
    fn delay(&self, retry: usize) -> Duration {
        let ms = self
            .backoff_ms
            .get(retry)
            .or(self.backoff_ms.last())
            .copied()
            .unwrap_or(0);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key. Keys are never
    /// stored in configuration files.
    pub api_key_env: String,
    pub temperature: f64,
    pub image_detail: ImageDetail,
    pub max_output_tokens: u32,
    pub num_runs: usize,
    pub retry: RetryPolicy,
    pub request_parallelism: usize,
    pub timeout_s: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o-2024-08-06".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            temperature: 0.0,
            image_detail: ImageDetail::Low,
            max_output_tokens: 16_384,
            num_runs: 2,
            retry: RetryPolicy::default(),
            request_parallelism: 4,
            timeout_s: 300,
            cache_dir: None,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_runs == 0 {
            return Err(Error::Config("client.num_runs must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::Config("client.temperature must be >= 0".into()));
        }
        if self.request_parallelism == 0 {
            return Err(Error::Config("client.request_parallelism must be at least 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(Error::Config("client.retry.max_attempts must be at least 1".into()));
        }
        Ok(())
    }

    fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A prompt with its image bytes loaded and digested.
struct LoadedPrompt {
    parts: Vec<LoadedPart>,
}

enum LoadedPart {
    Text(String),
    Image {
        media_type: String,
        data: Vec<u8>,
        digest: String,
    },
}

impl LoadedPrompt {
    fn load(seq: &PromptSequence) -> Result<Self> {
        let parts = seq
            .items
            .iter()
            .map(|item| match item {
                PromptItem::Text { text } => Ok(LoadedPart::Text(text.clone())),
                PromptItem::Image { image, .. } => {
                    let data = image.load_bytes()?;
                    Ok(LoadedPart::Image {
                        media_type: image.media_type(),
                        digest: sha256_hex(&data),
                        data,
                    })
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { parts })
    }

    /// Prompt serialisation used for cache keys: text verbatim, images by digest.
    fn key_material(&self) -> Value {
        Value::Array(
            self.parts
                .iter()
                .map(|p| match p {
                    LoadedPart::Text(t) => json!({ "text": t }),
                    LoadedPart::Image { media_type, digest, .. } => {
                        json!({ "image_sha256": digest, "media_type": media_type })
                    }
                })
                .collect(),
        )
    }

    fn content_parts(&self, detail: ImageDetail) -> Vec<Value> {
        let b64 = base64::engine::general_purpose::STANDARD;
        self.parts
            .iter()
            .map(|p| match p {
                LoadedPart::Text(t) => json!({ "type": "text", "text": t }),
                LoadedPart::Image { media_type, data, .. } => json!({
                    "type": "image_url",
                    "image_url": {
                        "url": format!("data:{media_type};base64,{}", b64.encode(data)),
                        "detail": detail.as_str(),
                    }
                }),
            })
            .collect()
    }
}

/// Digest identifying one (model, temperature, prompt, run) completion.
pub fn cache_key(cfg: &ClientConfig, seq: &PromptSequence, run_index: usize) -> Result<String> {
    Ok(key_for(cfg, &LoadedPrompt::load(seq)?, run_index))
}

fn key_for(cfg: &ClientConfig, prompt: &LoadedPrompt, run_index: usize) -> String {
    let material = json!({
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "detail": cfg.image_detail.as_str(),
        "prompt": prompt.key_material(),
        "run_index": run_index,
    });
    sha256_hex(material.to_string().as_bytes())
}

/// Request body in the chat-completions wire format.
pub fn request_body(cfg: &ClientConfig, seq: &PromptSequence) -> Result<Value> {
    Ok(body_for(cfg, &LoadedPrompt::load(seq)?))
}

fn body_for(cfg: &ClientConfig, prompt: &LoadedPrompt) -> Value {
    json!({
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
        "messages": [{
            "role": "user",
            "content": prompt.content_parts(cfg.image_detail),
        }],
    })
}

/// Extract `choices[0].message.content` from a response body.
pub fn extract_completion(body: &str) -> Result<String> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| Error::MalformedResponse(format!("invalid JSON ({e})")))?;
    let content = v
        .pointer("/choices/0/message/content")
        .ok_or_else(|| Error::MalformedResponse("missing choices[0].message.content".into()))?;
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        other => Err(Error::MalformedResponse(format!("unexpected content {other}"))),
    }
}

enum Attempt {
    Done(String),
    Transient(String),
}

pub struct ChatClient {
    cfg: ClientConfig,
    agent: ureq::Agent,
    cache: Option<ResponseCache>,
    network_requests: AtomicUsize,
}

impl ChatClient {
    pub fn new(cfg: ClientConfig) -> Result<Self> {
        cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(cfg.timeout_s)))
            .build()
            .into();
        let cache = cfg.cache_dir.as_deref().map(ResponseCache::open).transpose()?;
        Ok(Self {
            cfg,
            agent,
            cache,
            network_requests: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    /// HTTP requests issued so far, retries included.
    pub fn network_requests(&self) -> usize {
        self.network_requests.load(Ordering::SeqCst)
    }

    /// Raw completion for `seq`, from the cache when possible.
    pub fn complete(&self, seq: &PromptSequence, run_index: usize) -> Result<String> {
        let prompt = LoadedPrompt::load(seq)?;
        let key = key_for(&self.cfg, &prompt, run_index);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            debug!("cache hit {key}");
            return Ok(hit);
        }
        let body = body_for(&self.cfg, &prompt);
        let completion = self.send_with_retries(&body)?;
        if let Some(cache) = &self.cache {
            cache.put(CacheRecord {
                key,
                request_digest: sha256_hex(body.to_string().as_bytes()),
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                completion: completion.clone(),
            })?;
        }
        Ok(completion)
    }

    fn send_with_retries(&self, body: &Value) -> Result<String> {
        let attempts = self.cfg.retry.max_attempts;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.cfg.retry.delay(attempt as usize - 1));
            }
            match self.send_once(body)? {
                Attempt::Done(text) => return Ok(text),
                Attempt::Transient(msg) => {
                    warn!("attempt {}/{attempts} failed: {msg}", attempt + 1);
                    last_error = msg;
                }
            }
        }
        Err(Error::RetriesExhausted {
            attempts,
            last_error,
        })
    }

    fn send_once(&self, body: &Value) -> Result<Attempt> {
        self.network_requests.fetch_add(1, Ordering::SeqCst);
        let mut req = self.agent.post(&self.cfg.endpoint_url);
        if let Some(key) = self.cfg.api_key() {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Transient(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Ok(Attempt::Transient(format!("reading body: {e}"))),
        };
        match status {
            200..=299 => extract_completion(&text).map(Attempt::Done),
            401 | 403 => Err(Error::Authentication { status }),
            408 | 409 | 429 | 500..=599 => Ok(Attempt::Transient(format!("HTTP {status}"))),
            _ => Err(Error::HttpStatus {
                status,
                body: text.chars().take(500).collect(),
            }),
        }
    }
}
