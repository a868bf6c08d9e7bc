//! HTTP completion provider with a configurable request/response shape.
//!
//! Completion services differ only in field names and where the generated
//! text lives in the response, so the provider is driven by a small field map
//! instead of one hardcoded vendor layout. The defaults fit services that
//! accept `{"prompt": ..., "max_tokens": ..., "stop": [...]}` and answer with
//! `{"text": "..."}`; OpenAI-style endpoints work with
//! `text_path = "choices.0.text"` and `model` set.

use std::time::Duration;

use serde_json::{Map, Value};

use super::{CompletionProvider, CompletionRequest, LlmError};

#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    /// Full completion endpoint URL.
    pub url: String,
    /// Environment variable holding the API key; unset means no auth header.
    pub api_key_env: Option<String>,
    /// Header carrying the key (default `Authorization`).
    pub auth_header: String,
    /// Prefix prepended to the key value (default `Bearer `).
    pub auth_prefix: String,
    /// Model name to embed in the request body, when the service wants one.
    pub model: Option<String>,
    pub model_field: String,
    pub prompt_field: String,
    pub max_tokens_field: String,
    pub stop_field: String,
    /// Dot path to the completion text in the response, e.g. `text` or
    /// `choices.0.text`.
    pub text_path: String,
    pub timeout_secs: u64,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        HttpProviderConfig {
            url: String::new(),
            api_key_env: None,
            auth_header: "Authorization".into(),
            auth_prefix: "Bearer ".into(),
            model: None,
            model_field: "model".into(),
            prompt_field: "prompt".into(),
            max_tokens_field: "max_tokens".into(),
            stop_field: "stop".into(),
            text_path: "text".into(),
            timeout_secs: 120,
        }
    }
}

pub struct HttpProvider {
    config: HttpProviderConfig,
    client: reqwest::blocking::Client,
    id: String,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Result<Self, LlmError> {
        if config.url.is_empty() {
            return Err(LlmError::Config("llm url is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        let id = match &config.model {
            Some(model) => format!("http:{model}"),
            None => format!("http:{}", config.url),
        };
        Ok(HttpProvider { config, client, id })
    }

    fn build_body(&self, request: &CompletionRequest) -> Map<String, Value> {
        let mut body = Map::new();
        body.insert(
            self.config.prompt_field.clone(),
            Value::String(request.prompt.clone()),
        );
        body.insert(
            self.config.max_tokens_field.clone(),
            Value::Number(request.max_tokens.into()),
        );
        if !request.stop.is_empty() {
            body.insert(
                self.config.stop_field.clone(),
                Value::Array(
                    request
                        .stop
                        .iter()
                        .map(|s| Value::String(s.clone()))
                        .collect(),
                ),
            );
        }
        if let Some(model) = &self.config.model {
            body.insert(self.config.model_field.clone(), Value::String(model.clone()));
        }
        // Caller-supplied sampling parameters win over the defaults above.
        for (key, value) in &request.sampling {
            body.insert(key.clone(), value.clone());
        }
        body
    }

    fn api_key(&self) -> Result<Option<String>, LlmError> {
        match &self.config.api_key_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(key) if !key.is_empty() => Ok(Some(key)),
                _ => Err(LlmError::Config(format!(
                    "environment variable {var} is unset or empty"
                ))),
            },
        }
    }
}

/// Follows a dot path (`choices.0.text`) into `value`; numeric components
/// index arrays.
fn text_at_path<'a>(value: &'a Value, path: &str) -> Option<&'a str> {
    let mut current = value;
    for part in path.split('.') {
        current = match part.parse::<usize>() {
            Ok(index) => current.get(index)?,
            Err(_) => current.get(part)?,
        };
    }
    current.as_str()
}

impl CompletionProvider for HttpProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let body = Value::Object(self.build_body(request));
        let mut builder = self.client.post(&self.config.url).json(&body);
        if let Some(key) = self.api_key()? {
            builder = builder.header(
                &self.config.auth_header,
                format!("{}{key}", self.config.auth_prefix),
            );
        }
        let response = builder
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(LlmError::Transport(format!("server returned {status}")));
        }
        if !status.is_success() {
            let detail = response.text().unwrap_or_default();
            return Err(LlmError::Provider(format!(
                "server returned {status}: {}",
                detail.chars().take(200).collect::<String>()
            )));
        }
        let payload: Value = response
            .json()
            .map_err(|e| LlmError::Provider(format!("unreadable response body: {e}")))?;
        match text_at_path(&payload, &self.config.text_path) {
            Some(text) => Ok(text.to_string()),
            None => Err(LlmError::Provider(format!(
                "no text at path {:?} in response",
                self.config.text_path
            ))),
        }
    }

    fn id(&self) -> &str {
        &self.id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provider(config: HttpProviderConfig) -> HttpProvider {
        HttpProvider::new(config).unwrap()
    }

    fn base_config() -> HttpProviderConfig {
        HttpProviderConfig {
            url: "http://localhost:9/v1/completions".into(),
            ..HttpProviderConfig::default()
        }
    }

    #[test]
    fn body_uses_configured_field_names() {
        let mut config = base_config();
        config.prompt_field = "input".into();
        config.max_tokens_field = "n_tokens".into();
        config.model = Some("m7".into());
        let provider = provider(config);
        let request = CompletionRequest::new("Q: ?").with_stop("###").with_max_tokens(200);
        let body = provider.build_body(&request);
        assert_eq!(body["input"], "Q: ?");
        assert_eq!(body["n_tokens"], 200);
        assert_eq!(body["model"], "m7");
        assert_eq!(body["stop"], serde_json::json!(["###"]));
    }

    #[test]
    fn sampling_parameters_pass_through_and_override() {
        let provider = provider(base_config());
        let mut request = CompletionRequest::new("p").with_max_tokens(200);
        request
            .sampling
            .insert("temperature".into(), serde_json::json!(0.2));
        request
            .sampling
            .insert("max_tokens".into(), serde_json::json!(64));
        let body = provider.build_body(&request);
        assert_eq!(body["temperature"], serde_json::json!(0.2));
        assert_eq!(body["max_tokens"], 64);
    }

    #[test]
    fn stop_omitted_when_empty() {
        let provider = provider(base_config());
        let body = provider.build_body(&CompletionRequest::new("p"));
        assert!(!body.contains_key("stop"));
    }

    #[test]
    fn text_path_walks_objects_and_arrays() {
        let payload = serde_json::json!({
            "choices": [{"text": "hello"}],
            "text": "flat"
        });
        assert_eq!(text_at_path(&payload, "text"), Some("flat"));
        assert_eq!(text_at_path(&payload, "choices.0.text"), Some("hello"));
        assert_eq!(text_at_path(&payload, "choices.1.text"), None);
        assert_eq!(text_at_path(&payload, "missing.path"), None);
    }

    #[test]
    fn missing_api_key_env_is_config_error() {
        let mut config = base_config();
        config.api_key_env = Some("BIOQA_TEST_KEY_THAT_IS_UNSET".into());
        let provider = provider(config);
        let result = provider.complete(&CompletionRequest::new("p"));
        assert!(matches!(result, Err(LlmError::Config(_))));
    }

    #[test]
    fn empty_url_rejected_at_construction() {
        assert!(matches!(
            HttpProvider::new(HttpProviderConfig::default()),
            Err(LlmError::Config(_))
        ));
    }
}
