//! Completion gateway: a provider-agnostic front door for LLM text
//! completion. The gateway owns stop-sequence truncation, bounded in-flight
//! concurrency, transient-error retries, and validated resampling, so
//! providers only have to turn a request into raw text.

mod http;
mod mock;

pub use http::{HttpProvider, HttpProviderConfig};
pub use mock::{MockProvider, RecordedRequest};

use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::util::{retry_with_backoff, Semaphore};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("provider transport failure: {0}")]
    Transport(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("provider configuration: {0}")]
    Config(String),
}

impl LlmError {
    fn is_transient(&self) -> bool {
        matches!(self, LlmError::Transport(_))
    }
}

/// One completion call: the full prompt plus sampling controls. Parameters in
/// `sampling` are passed through to HTTP providers verbatim, so provider
/// defaults apply to anything left unset.
#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub prompt: String,
    pub stop: Vec<String>,
    pub max_tokens: u32,
    pub sampling: serde_json::Map<String, serde_json::Value>,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            stop: Vec::new(),
            max_tokens: 200,
            sampling: serde_json::Map::new(),
        }
    }

    pub fn with_stop(mut self, stop: impl Into<String>) -> Self {
        self.stop.push(stop.into());
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }
}

/// A finished completion. `attempt` is 1-based; `valid` is false only when
/// resampling ran out of attempts without producing an accepted response.
#[derive(Debug, Clone)]
pub struct CompletionResponse {
    pub text: String,
    pub provider_id: String,
    pub attempt: u32,
    pub valid: bool,
}

/// Resampling policy: re-issue the identical request until the validator
/// accepts the text or `max_attempts` responses have been drawn.
pub struct ResamplePolicy {
    pub max_attempts: u32,
    pub validator: Arc<dyn Fn(&str) -> bool + Send + Sync>,
}

impl ResamplePolicy {
    pub fn new(max_attempts: u32, validator: impl Fn(&str) -> bool + Send + Sync + 'static) -> Self {
        ResamplePolicy {
            max_attempts: max_attempts.max(1),
            validator: Arc::new(validator),
        }
    }
}

/// Turns a completion request into raw (un-truncated) text.
pub trait CompletionProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
    /// Stable identifier recorded on responses and used for cache scoping.
    fn id(&self) -> &str;
}

/// Provider wrapper applying the cross-cutting completion behavior.
pub struct Gateway {
    provider: Arc<dyn CompletionProvider>,
    semaphore: Semaphore,
    max_retries: u32,
    initial_backoff: Duration,
}

impl Gateway {
    pub fn new(provider: Arc<dyn CompletionProvider>) -> Self {
        Gateway {
            provider,
            semaphore: Semaphore::new(4),
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }

    pub fn with_concurrency(mut self, permits: usize) -> Self {
        self.semaphore = Semaphore::new(permits);
        self
    }

    pub fn with_retries(mut self, max_retries: u32, initial_backoff: Duration) -> Self {
        self.max_retries = max_retries.max(1);
        self.initial_backoff = initial_backoff;
        self
    }

    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    /// Issues one completion: acquires a concurrency permit, retries transient
    /// transport failures with exponential backoff, and truncates the text at
    /// the earliest stop sequence.
    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        validate_request(request)?;
        let _permit = self.semaphore.acquire();
        let raw = retry_with_backoff(
            self.max_retries,
            self.initial_backoff,
            LlmError::is_transient,
            || self.provider.complete(request),
        )?;
        Ok(CompletionResponse {
            text: truncate_at_stop(&raw, &request.stop).to_string(),
            provider_id: self.provider.id().to_string(),
            attempt: 1,
            valid: true,
        })
    }

    /// Issues the identical request up to `policy.max_attempts` times and
    /// returns the first response the validator accepts. When every attempt is
    /// rejected the final response comes back with `valid == false` so callers
    /// can degrade explicitly instead of failing the run.
    pub fn complete_with_resample(
        &self,
        request: &CompletionRequest,
        policy: &ResamplePolicy,
    ) -> Result<CompletionResponse, LlmError> {
        let mut last = None;
        for attempt in 1..=policy.max_attempts {
            let mut response = self.complete(request)?;
            response.attempt = attempt;
            if (policy.validator)(&response.text) {
                return Ok(response);
            }
            last = Some(response);
        }
        let mut response = last.expect("max_attempts >= 1");
        response.valid = false;
        Ok(response)
    }
}

fn validate_request(request: &CompletionRequest) -> Result<(), LlmError> {
    if request.prompt.is_empty() {
        return Err(LlmError::InvalidRequest("prompt is empty".into()));
    }
    if request.max_tokens == 0 {
        return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
    }
    Ok(())
}

/// Cuts `text` at the earliest occurrence of any stop sequence.
pub fn truncate_at_stop<'a>(text: &'a str, stops: &[String]) -> &'a str {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min();
    match cut {
        Some(idx) => &text[..idx],
        None => text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct FlakyProvider {
        failures_before_success: u32,
        calls: AtomicU32,
    }

    impl CompletionProvider for FlakyProvider {
        fn complete(&self, _request: &CompletionRequest) -> Result<String, LlmError> {
            let call = self.calls.fetch_add(1, Ordering::SeqCst);
            if call < self.failures_before_success {
                Err(LlmError::Transport("connection reset".into()))
            } else {
                Ok("answer ### trailing".into())
            }
        }

        fn id(&self) -> &str {
            "flaky"
        }
    }

    #[test]
    fn truncates_at_earliest_stop() {
        let stops = vec!["###".to_string(), "END".to_string()];
        assert_eq!(truncate_at_stop("abcENDdef###ghi", &stops), "abc");
        assert_eq!(truncate_at_stop("abc###defENDghi", &stops), "abc");
        assert_eq!(truncate_at_stop("no stops here", &stops), "no stops here");
        assert_eq!(truncate_at_stop("###leading", &stops), "");
    }

    #[test]
    fn gateway_retries_transient_failures() {
        let provider = Arc::new(FlakyProvider {
            failures_before_success: 2,
            calls: AtomicU32::new(0),
        });
        let gateway = Gateway::new(provider.clone())
            .with_retries(3, Duration::from_millis(1));
        let request = CompletionRequest::new("prompt").with_stop("###");
        let response = gateway.complete(&request).unwrap();
        assert_eq!(response.text, "answer ");
        assert_eq!(provider.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gateway_gives_up_after_bounded_retries() {
        let provider = Arc::new(FlakyProvider {
            failures_before_success: 10,
            calls: AtomicU32::new(0),
        });
        let gateway = Gateway::new(provider.clone())
            .with_retries(3, Duration::from_millis(1));
        let request = CompletionRequest::new("prompt");
        assert!(matches!(
            gateway.complete(&request),
            Err(LlmError::Transport(_))
        ));
        assert_eq!(provider.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn empty_prompt_is_rejected() {
        let gateway = Gateway::new(Arc::new(MockProvider::new()));
        let request = CompletionRequest::new("");
        assert!(matches!(
            gateway.complete(&request),
            Err(LlmError::InvalidRequest(_))
        ));
    }

    #[test]
    fn resample_returns_first_valid_attempt() {
        let provider = MockProvider::scripted(&[(
            "prompt",
            &["bad one", "bad two", "good", "never reached"],
        )]);
        let gateway = Gateway::new(Arc::new(provider));
        let request = CompletionRequest::new("prompt");
        let policy = ResamplePolicy::new(4, |text| text == "good");
        let response = gateway.complete_with_resample(&request, &policy).unwrap();
        assert_eq!(response.text, "good");
        assert_eq!(response.attempt, 3);
        assert!(response.valid);
    }

    #[test]
    fn resample_flags_exhaustion() {
        let provider = MockProvider::scripted(&[("prompt", &["bad"])]);
        let gateway = Gateway::new(Arc::new(provider));
        let request = CompletionRequest::new("prompt");
        let policy = ResamplePolicy::new(3, |_| false);
        let response = gateway.complete_with_resample(&request, &policy).unwrap();
        assert!(!response.valid);
        assert_eq!(response.attempt, 3);
        assert_eq!(response.text, "bad");
    }

    #[test]
    fn resample_stops_calling_after_acceptance() {
        let provider = Arc::new(MockProvider::scripted(&[("prompt", &["good"])]));
        let gateway = Gateway::new(provider.clone());
        let request = CompletionRequest::new("prompt");
        let policy = ResamplePolicy::new(5, |text| text == "good");
        gateway.complete_with_resample(&request, &policy).unwrap();
        assert_eq!(provider.call_count(), 1);
    }
}
