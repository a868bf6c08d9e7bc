//! Deterministic completion provider for offline runs and tests.
//!
//! Responses are keyed by the SHA-256 of the full prompt, so fixtures stay
//! readable (no giant prompt strings in JSON) and any drift in prompt
//! construction surfaces as a missed lookup instead of a silent wrong answer.
//! Each key maps to a response sequence: attempt \(n\) consumes entry \(n\),
//! and the last entry repeats once the sequence is exhausted. Cursors advance
//! per prompt key, which keeps replay deterministic under any parallelism.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Deserialize;

use super::{CompletionProvider, CompletionRequest, LlmError};
use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub prompt_sha256: String,
    pub max_tokens: u32,
    pub stop: Vec<String>,
}

#[derive(Default)]
pub struct MockProvider {
    responses: HashMap<String, Vec<String>>,
    fallback: Vec<String>,
    cursors: Mutex<HashMap<String, usize>>,
    requests: Mutex<Vec<RecordedRequest>>,
    calls: AtomicUsize,
}

#[derive(Deserialize)]
struct FixtureFile {
    #[serde(default)]
    responses: HashMap<String, Vec<String>>,
    #[serde(default)]
    default: Vec<String>,
}

impl MockProvider {
    pub fn new() -> Self {
        MockProvider::default()
    }

    /// Builds a provider from plaintext prompts; keys are hashed internally.
    pub fn scripted(entries: &[(&str, &[&str])]) -> Self {
        let mut provider = MockProvider::new();
        for (prompt, responses) in entries {
            provider.add_response_sequence(
                prompt,
                responses.iter().map(|s| s.to_string()).collect(),
            );
        }
        provider
    }

    /// Loads a fixture: `{"responses": {"<sha256 of prompt>": ["..."]}, "default": ["..."]}`.
    pub fn from_fixture_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let bytes = fs::read(path.as_ref()).map_err(|e| {
            LlmError::Config(format!(
                "cannot read mock fixture {}: {e}",
                path.as_ref().display()
            ))
        })?;
        let fixture: FixtureFile = serde_json::from_slice(&bytes)
            .map_err(|e| LlmError::Config(format!("malformed mock fixture: {e}")))?;
        Ok(MockProvider {
            responses: fixture.responses,
            fallback: fixture.default,
            ..MockProvider::default()
        })
    }

    /// Registers the response sequence for one prompt.
    pub fn add_response_sequence(&mut self, prompt: &str, responses: Vec<String>) {
        self.responses.insert(Self::prompt_key(prompt), responses);
    }

    /// Sets the response sequence used when no prompt key matches.
    pub fn set_fallback(&mut self, responses: Vec<String>) {
        self.fallback = responses;
    }

    /// The fixture key for a prompt.
    pub fn prompt_key(prompt: &str) -> String {
        sha256_hex(prompt.as_bytes())
    }

    /// Total completions served so far.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Copies of every request seen, in arrival order.
    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl CompletionProvider for MockProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let key = Self::prompt_key(&request.prompt);
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().unwrap().push(RecordedRequest {
            prompt_sha256: key.clone(),
            max_tokens: request.max_tokens,
            stop: request.stop.clone(),
        });
        let sequence = self.responses.get(&key).unwrap_or(&self.fallback);
        if sequence.is_empty() {
            return Ok(String::new());
        }
        let mut cursors = self.cursors.lock().unwrap();
        let cursor = cursors.entry(key).or_insert(0);
        let text = sequence[(*cursor).min(sequence.len() - 1)].clone();
        *cursor += 1;
        Ok(text)
    }

    fn id(&self) -> &str {
        "mock"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(prompt: &str) -> CompletionRequest {
        CompletionRequest::new(prompt)
    }

    #[test]
    fn serves_sequences_and_repeats_last() {
        let provider = MockProvider::scripted(&[("p", &["one", "two"])]);
        assert_eq!(provider.complete(&request("p")).unwrap(), "one");
        assert_eq!(provider.complete(&request("p")).unwrap(), "two");
        assert_eq!(provider.complete(&request("p")).unwrap(), "two");
        assert_eq!(provider.call_count(), 3);
    }

    #[test]
    fn unknown_prompt_uses_fallback_then_empty() {
        let mut provider = MockProvider::new();
        assert_eq!(provider.complete(&request("unseen")).unwrap(), "");
        provider.set_fallback(vec!["generic".into()]);
        assert_eq!(provider.complete(&request("unseen")).unwrap(), "generic");
    }

    #[test]
    fn cursors_are_independent_per_prompt() {
        let provider = MockProvider::scripted(&[("a", &["a1", "a2"]), ("b", &["b1", "b2"])]);
        assert_eq!(provider.complete(&request("a")).unwrap(), "a1");
        assert_eq!(provider.complete(&request("b")).unwrap(), "b1");
        assert_eq!(provider.complete(&request("a")).unwrap(), "a2");
        assert_eq!(provider.complete(&request("b")).unwrap(), "b2");
    }

    #[test]
    fn records_request_metadata() {
        let provider = MockProvider::new();
        let req = CompletionRequest::new("hello").with_stop("###").with_max_tokens(42);
        provider.complete(&req).unwrap();
        let requests = provider.requests();
        assert_eq!(requests.len(), 1);
        assert_eq!(requests[0].prompt_sha256, MockProvider::prompt_key("hello"));
        assert_eq!(requests[0].max_tokens, 42);
        assert_eq!(requests[0].stop, vec!["###".to_string()]);
    }

    #[test]
    fn fixture_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mock.json");
        let key = MockProvider::prompt_key("the prompt");
        let fixture = serde_json::json!({
            "responses": { key: ["first", "second"] },
            "default": ["fallback"]
        });
        std::fs::write(&path, serde_json::to_string(&fixture).unwrap()).unwrap();
        let provider = MockProvider::from_fixture_file(&path).unwrap();
        assert_eq!(provider.complete(&request("the prompt")).unwrap(), "first");
        assert_eq!(provider.complete(&request("other")).unwrap(), "fallback");
    }

    #[test]
    fn malformed_fixture_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mock.json");
        std::fs::write(&path, "not json").unwrap();
        assert!(matches!(
            MockProvider::from_fixture_file(&path),
            Err(LlmError::Config(_))
        ));
    }
}
