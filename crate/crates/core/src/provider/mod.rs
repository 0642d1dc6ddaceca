//! Completion providers: a remote chat-completions client and a
//! deterministic mock, both reporting token usage.

mod mock;
mod remote;
mod retry;

pub use mock::{MockProvider, MOCK_COMPLETION_TOKENS};
pub use remote::{RemoteConfig, RemoteProvider, DEFAULT_IN_FLIGHT};
pub use retry::{retrying, Retried, RetryPolicy};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        Self {
            prompt_tokens,
            completion_tokens,
        }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }

    pub fn scaled(&self, k: u64) -> Self {
        Self::new(self.prompt_tokens * k, self.completion_tokens * k)
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.prompt_tokens + rhs.prompt_tokens,
            self.completion_tokens + rhs.completion_tokens,
        )
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for TokenUsage {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderRequest {
    pub prompt: String,
    pub max_output_tokens: u32,
    pub temperature: f32,
    /// `video_id/slot/level` for explanations, `video_id/punctuation/chunk`
    /// for punctuation requests. Used for logs and ledger entries.
    pub request_tag: String,
}

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 400;

impl ProviderRequest {
    pub fn new(prompt: impl Into<String>, request_tag: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            temperature: 0.0,
            request_tag: request_tag.into(),
        }
    }

    pub fn with_max_output_tokens(mut self, n: u32) -> Self {
        self.max_output_tokens = n;
        self
    }

    pub fn with_temperature(mut self, t: f32) -> Self {
        self.temperature = t;
        self
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.prompt.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("prompt is empty".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(ProviderError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} out of range",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderResponse {
    pub text: String,
    pub usage: TokenUsage,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited (retry after {retry_after_ms:?} ms)")]
    RateLimited { retry_after_ms: Option<u64> },
    #[error("backend error {status}: {body}")]
    BackendError { status: u16, body: String },
    #[error("response carried no usage accounting")]
    UsageMissing,
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted {
        attempts: u32,
        last: Box<ProviderError>,
    },
}

impl ProviderError {
    /// Only timeouts and rate limiting are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Self::Timeout | Self::RateLimited { .. })
    }
}

/// Anything that can turn a prompt into a completion.
#[async_trait]
pub trait Provider: Send + Sync {
    /// Model identifier recorded in bundle metadata.
    fn model_name(&self) -> &str;

    /// Largest number of concurrent `complete` calls worth issuing.
    fn max_in_flight(&self) -> usize {
        1
    }

    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

#[async_trait]
impl<P: Provider + ?Sized> Provider for Arc<P> {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }

    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }

    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).complete(request).await
    }
}

/// Wraps a provider and counts calls, so callers can assert when no
/// inference happened.
#[derive(Debug, Default)]
pub struct CountingProvider<P> {
    inner: P,
    calls: AtomicUsize,
}

impl<P> CountingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

#[async_trait]
impl<P: Provider> Provider for CountingProvider<P> {
    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight()
    }

    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request).await
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_validation() {
        assert!(ProviderRequest::new("", "t").validate().is_err());
        assert!(ProviderRequest::new("   ", "t").validate().is_err());
        assert!(ProviderRequest::new("p", "t").with_max_output_tokens(0).validate().is_err());
        assert!(ProviderRequest::new("p", "t").with_temperature(-1.0).validate().is_err());
        assert!(ProviderRequest::new("p", "t").validate().is_ok());
    }

    #[test]
    fn usage_sums() {
        let total: TokenUsage = [TokenUsage::new(1, 2), TokenUsage::new(3, 4)].into_iter().sum();
        assert_eq!(total, TokenUsage::new(4, 6));
        assert_eq!(total.total(), 10);
        assert_eq!(total.scaled(3), TokenUsage::new(12, 18));
    }

    #[test]
    fn retryable_errors() {
        assert!(ProviderError::Timeout.is_retryable());
        assert!(ProviderError::RateLimited { retry_after_ms: None }.is_retryable());
        assert!(!ProviderError::BackendError { status: 500, body: String::new() }.is_retryable());
        assert!(!ProviderError::UsageMissing.is_retryable());
    }
}
