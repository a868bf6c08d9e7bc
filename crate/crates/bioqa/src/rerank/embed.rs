//! Embedding providers: a remote HTTP service for real runs, a seeded
//! feature-hash embedder for offline determinism, and a disk cache wrapper.

use std::path::PathBuf;
use std::time::Duration;

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::RerankError;
use crate::store::FileStore;

/// Maps texts to fixed-dimension vectors. Implementations must be
/// deterministic for identical input within one configured instance.
pub trait EmbeddingProvider: Send + Sync {
    /// Embeds a batch; the result has one vector per input, same order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RerankError>;
    /// Input capacity in whitespace words; longer texts are truncated by the
    /// caller before embedding.
    fn max_input_words(&self) -> usize;
    /// Stable identifier; cached vectors are scoped by it.
    fn id(&self) -> &str;
}

/// Deterministic bag-of-words feature hashing. Each lowercased word hashes to
/// one bucket with a ±1 sign; the accumulated vector is L2-normalized. No
/// semantics, but fully reproducible — the offline stand-in for a sentence
/// embedding model. Words still share buckets across related texts, so
/// overlapping wording yields higher cosine similarity.
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
    max_words: usize,
    id: String,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64, max_words: usize) -> Self {
        let dim = dim.max(1);
        HashEmbedder {
            dim,
            seed,
            max_words: max_words.max(1),
            id: format!("hash-d{dim}-s{seed}-w{max_words}"),
        }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(64, 0, 256)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RerankError> {
        Ok(texts
            .iter()
            .map(|text| {
                let mut vector = vec![0.0f64; self.dim];
                for word in text.to_lowercase().split_whitespace() {
                    let mut hasher = Sha256::new();
                    hasher.update(self.seed.to_le_bytes());
                    hasher.update(word.as_bytes());
                    let digest = hasher.finalize();
                    let bucket =
                        (u64::from_le_bytes(digest[0..8].try_into().unwrap()) % self.dim as u64)
                            as usize;
                    let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
                    vector[bucket] += sign;
                }
                let norm: f64 = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for x in &mut vector {
                        *x /= norm;
                    }
                } else {
                    // Empty or all-cancelling text: fall back to a fixed unit
                    // vector so cosine stays defined.
                    vector[0] = 1.0;
                }
                vector
            })
            .collect())
    }

    fn max_input_words(&self) -> usize {
        self.max_words
    }

    fn id(&self) -> &str {
        &self.id
    }
}

/// Remote embedding endpoint configuration. The request is
/// `{texts_field: [...]}` (plus `model` when set); the response list is found
/// by dot path, and each item either is the vector itself or holds it under
/// `item_vector_field`.
#[derive(Debug, Clone)]
pub struct HttpEmbedderConfig {
    pub url: String,
    pub api_key_env: Option<String>,
    pub auth_header: String,
    pub auth_prefix: String,
    pub model: Option<String>,
    pub texts_field: String,
    /// Dot path to the array of embeddings in the response, e.g. `data`.
    pub list_path: String,
    /// Field holding the vector inside each list item; empty means the item
    /// is the vector.
    pub item_vector_field: String,
    pub max_input_words: usize,
    pub timeout_secs: u64,
}

impl Default for HttpEmbedderConfig {
    fn default() -> Self {
        HttpEmbedderConfig {
            url: String::new(),
            api_key_env: None,
            auth_header: "Authorization".into(),
            auth_prefix: "Bearer ".into(),
            model: None,
            texts_field: "input".into(),
            list_path: "data".into(),
            item_vector_field: "embedding".into(),
            max_input_words: 256,
            timeout_secs: 120,
        }
    }
}

pub struct HttpEmbedder {
    config: HttpEmbedderConfig,
    client: reqwest::blocking::Client,
    id: String,
}

impl HttpEmbedder {
    pub fn new(config: HttpEmbedderConfig) -> Result<Self, RerankError> {
        if config.url.is_empty() {
            return Err(RerankError::Provider("embedding url is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| RerankError::Provider(e.to_string()))?;
        let id = match &config.model {
            Some(model) => format!("http:{model}"),
            None => format!("http:{}", config.url),
        };
        Ok(HttpEmbedder { config, client, id })
    }

    fn parse_response(&self, payload: &Value, expected: usize) -> Result<Vec<Vec<f64>>, RerankError> {
        let mut node = payload;
        for part in self.config.list_path.split('.').filter(|p| !p.is_empty()) {
            node = node.get(part).ok_or_else(|| {
                RerankError::Provider(format!("no list at path {:?}", self.config.list_path))
            })?;
        }
        let Value::Array(items) = node else {
            return Err(RerankError::Provider(format!(
                "path {:?} is not an array",
                self.config.list_path
            )));
        };
        let mut vectors = Vec::with_capacity(items.len());
        for item in items {
            let vector_value = if self.config.item_vector_field.is_empty() {
                item
            } else {
                item.get(&self.config.item_vector_field).ok_or_else(|| {
                    RerankError::Provider(format!(
                        "list item lacks field {:?}",
                        self.config.item_vector_field
                    ))
                })?
            };
            let Value::Array(numbers) = vector_value else {
                return Err(RerankError::Provider("embedding is not an array".into()));
            };
            let vector: Option<Vec<f64>> = numbers.iter().map(Value::as_f64).collect();
            vectors.push(vector.ok_or_else(|| {
                RerankError::Provider("embedding contains non-numeric values".into())
            })?);
        }
        if vectors.len() != expected {
            return Err(RerankError::CountMismatch {
                expected,
                got: vectors.len(),
            });
        }
        Ok(vectors)
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RerankError> {
        let mut body = serde_json::Map::new();
        body.insert(
            self.config.texts_field.clone(),
            Value::Array(texts.iter().map(|t| Value::String(t.clone())).collect()),
        );
        if let Some(model) = &self.config.model {
            body.insert("model".into(), Value::String(model.clone()));
        }
        let mut builder = self.client.post(&self.config.url).json(&Value::Object(body));
        if let Some(var) = &self.config.api_key_env {
            let key = std::env::var(var).map_err(|_| {
                RerankError::Provider(format!("environment variable {var} is unset"))
            })?;
            builder = builder.header(
                &self.config.auth_header,
                format!("{}{key}", self.config.auth_prefix),
            );
        }
        let response = builder
            .send()
            .map_err(|e| RerankError::Transport(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(RerankError::Transport(format!("server returned {status}")));
        }
        if !status.is_success() {
            return Err(RerankError::Provider(format!("server returned {status}")));
        }
        let payload: Value = response
            .json()
            .map_err(|e| RerankError::Provider(format!("unreadable response body: {e}")))?;
        self.parse_response(&payload, texts.len())
    }

    fn max_input_words(&self) -> usize {
        self.config.max_input_words
    }

    fn id(&self) -> &str {
        &self.id
    }
}

/// Wraps a provider with a per-text disk cache. Vectors are stored one file
/// per text (keyed by content), scoped by the inner provider's id so switching
/// models never replays stale vectors.
pub struct CachedEmbedder<P> {
    inner: P,
    store: FileStore,
}

impl<P: EmbeddingProvider> CachedEmbedder<P> {
    pub fn new(inner: P, cache_dir: impl Into<PathBuf>) -> Result<Self, RerankError> {
        let dir = cache_dir.into().join(sanitize_for_path(inner.id()));
        let store = FileStore::open(dir).map_err(|e| RerankError::Cache(e.to_string()))?;
        Ok(CachedEmbedder { inner, store })
    }

    fn decode(serialized: &str) -> Option<Vec<f64>> {
        let mut lines = serialized.lines();
        let dim: usize = lines.next()?.strip_prefix("dim ")?.parse().ok()?;
        let values: Option<Vec<f64>> = lines.map(|line| line.parse().ok()).collect();
        let values = values?;
        (values.len() == dim).then_some(values)
    }

    fn encode(vector: &[f64]) -> String {
        let mut out = format!("dim {}\n", vector.len());
        for value in vector {
            // `{:?}` prints enough digits to round-trip an f64 exactly.
            out.push_str(&format!("{value:?}\n"));
        }
        out
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedEmbedder<P> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RerankError> {
        let mut results: Vec<Option<Vec<f64>>> = texts
            .iter()
            .map(|text| self.store.get(text).and_then(|s| Self::decode(&s)))
            .collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| results[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.inner.embed(&batch)?;
            if vectors.len() != missing.len() {
                return Err(RerankError::CountMismatch {
                    expected: missing.len(),
                    got: vectors.len(),
                });
            }
            for (&index, vector) in missing.iter().zip(vectors) {
                self.store
                    .put(&texts[index], &Self::encode(&vector))
                    .map_err(|e| RerankError::Cache(e.to_string()))?;
                results[index] = Some(vector);
            }
        }
        Ok(results.into_iter().map(|r| r.unwrap()).collect())
    }

    fn max_input_words(&self) -> usize {
        self.inner.max_input_words()
    }

    fn id(&self) -> &str {
        self.inner.id()
    }
}

fn sanitize_for_path(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
