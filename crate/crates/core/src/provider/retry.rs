use rand::Rng;
use std::time::Duration;

use super::{Provider, ProviderError, ProviderRequest, ProviderResponse};

/// Exponential backoff with jitter. Only [`ProviderError::is_retryable`]
/// errors are retried.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
            jitter: true,
        }
    }
}

impl RetryPolicy {
    pub fn no_retry() -> Self {
        Self {
            max_attempts: 1,
            ..Self::default()
        }
    }

    /// Delay before attempt `failed + 1`, given `failed` failures so far.
    pub fn delay_after(&self, failed: u32, error: &ProviderError) -> Duration {
        let exp = self
            .base_delay
            .saturating_mul(1u32 << (failed.saturating_sub(1)).min(16))
            .min(self.max_delay);
        let mut delay = if self.jitter {
            exp.mul_f64(rand::rng().random_range(0.5..=1.0))
        } else {
            exp
        };
        if let ProviderError::RateLimited {
            retry_after_ms: Some(ms),
        } = error
        {
            delay = delay.max(Duration::from_millis(*ms));
        }
        delay
    }
}

/// A successful response and how many attempts it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Retried {
    pub response: ProviderResponse,
    pub attempts: u32,
}

pub async fn retrying<P: Provider + ?Sized>(
    provider: &P,
    request: &ProviderRequest,
    policy: &RetryPolicy,
) -> Result<Retried, ProviderError> {
    request.validate()?;
    let max_attempts = policy.max_attempts.max(1);
    let mut attempts = 0;
    loop {
        attempts += 1;
        match provider.complete(request).await {
            Ok(response) => return Ok(Retried { response, attempts }),
            Err(e) if !e.is_retryable() => return Err(e),
            Err(e) if attempts >= max_attempts => {
                return Err(ProviderError::Exhausted {
                    attempts,
                    last: Box::new(e),
                })
            }
            Err(e) => {
                let delay = policy.delay_after(attempts, &e);
                tracing::debug!(tag = %request.request_tag, attempts, ?delay, error = %e, "retrying");
                tokio::time::sleep(delay).await;
            }
        }
    }
}
