use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};
use tokio::sync::Semaphore;

use super::{Provider, ProviderError, ProviderRequest, ProviderResponse, TokenUsage};

pub const DEFAULT_IN_FLIGHT: usize = 4;
const BODY_EXCERPT_CHARS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL up to, not including, `/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            in_flight: DEFAULT_IN_FLIGHT,
        }
    }
}

impl RemoteConfig {
    /// Defaults overridden by `HUH_API_BASE_URL`, `HUH_MODEL` and `HUH_API_KEY`.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Ok(v) = std::env::var("HUH_API_BASE_URL") {
            cfg.base_url = v;
        }
        if let Ok(v) = std::env::var("HUH_MODEL") {
            cfg.model = v;
        }
        cfg.api_key = std::env::var("HUH_API_KEY").ok().filter(|k| !k.is_empty());
        cfg
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    max_tokens: u32,
    temperature: f32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

/// Client for the common `POST {base_url}/chat/completions` JSON shape.
/// Never retries by itself; wrap calls with [`super::retrying`].
pub struct RemoteProvider {
    client: reqwest::Client,
    config: RemoteConfig,
    permits: Semaphore,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Result<Self, ProviderError> {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ProviderError::BackendError {
                status: 0,
                body: format!("cannot build HTTP client: {e}"),
            })?;
        let permits = Semaphore::new(config.in_flight.max(1));
        Ok(Self {
            client,
            config,
            permits,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(BODY_EXCERPT_CHARS).collect()
}

fn transport_error(e: reqwest::Error) -> ProviderError {
    if e.is_timeout() {
        ProviderError::Timeout
    } else {
        ProviderError::BackendError {
            status: e.status().map_or(0, |s| s.as_u16()),
            body: excerpt(&e.to_string()),
        }
    }
}

#[async_trait]
impl Provider for RemoteProvider {
    fn model_name(&self) -> &str {
        &self.config.model
    }

    fn max_in_flight(&self) -> usize {
        self.config.in_flight.max(1)
    }

    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        request.validate()?;
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        let body = ChatRequest {
            model: &self.config.model,
            messages: [ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            max_tokens: request.max_output_tokens,
            temperature: request.temperature,
        };
        let started = Instant::now();
        let mut http = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            http = http.bearer_auth(key);
        }
        let resp = http.send().await.map_err(transport_error)?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after_ms = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<f64>().ok())
                .map(|secs| (secs * 1000.0) as u64);
            return Err(ProviderError::RateLimited { retry_after_ms });
        }
        if status.as_u16() == 408 || status.as_u16() == 504 {
            return Err(ProviderError::Timeout);
        }
        let text = resp.text().await.map_err(transport_error)?;
        if !status.is_success() {
            return Err(ProviderError::BackendError {
                status: status.as_u16(),
                body: excerpt(&text),
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| ProviderError::BackendError {
                status: status.as_u16(),
                body: excerpt(&format!("unparseable reply ({e}): {text}")),
            })?;
        let usage = parsed.usage.ok_or(ProviderError::UsageMissing)?;
        let (Some(prompt_tokens), Some(completion_tokens)) = (usage.prompt_tokens, usage.completion_tokens)
        else {
            return Err(ProviderError::UsageMissing);
        };
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::BackendError {
                status: status.as_u16(),
                body: "reply has no message content".into(),
            })?;
        Ok(ProviderResponse {
            text: content.trim().to_string(),
            usage: TokenUsage::new(prompt_tokens, completion_tokens),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
