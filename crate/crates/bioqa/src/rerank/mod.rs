//! Embedding-based reranking: orders retrieved documents by cosine similarity
//! between question and document embeddings, then picks the best sentence of
//! each top document as its snippet.

pub mod embed;
mod snippets;

pub use embed::{CachedEmbedder, EmbeddingProvider, HashEmbedder, HttpEmbedder, HttpEmbedderConfig};
pub use snippets::{extract_snippets, split_sentences};

use thiserror::Error;

use crate::model::{Document, Question};
use crate::util::word_prefix;

#[derive(Debug, Error)]
pub enum RerankError {
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot compute cosine similarity with a zero vector")]
    ZeroVector,
    #[error("embedding provider returned {got} vectors for {expected} inputs")]
    CountMismatch { expected: usize, got: usize },
    #[error("invalid ranking request: {0}")]
    InvalidRequest(String),
    #[error("embedding transport failure: {0}")]
    Transport(String),
    #[error("embedding provider error: {0}")]
    Provider(String),
    #[error("embedding cache: {0}")]
    Cache(String),
}

/// Cosine similarity between two equal-length, nonzero vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, RerankError> {
    if a.len() != b.len() {
        return Err(RerankError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(RerankError::ZeroVector);
    }
    Ok(dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// Cuts `text` to the provider's input capacity, counted in whitespace words.
/// The result is a literal prefix of the input.
pub fn truncate_for_embedding<'a>(text: &'a str, provider: &dyn EmbeddingProvider) -> &'a str {
    word_prefix(text, provider.max_input_words())
}

/// Documents ordered by descending relevance, scores attached.
#[derive(Debug, Clone)]
pub struct RankedList {
    pub entries: Vec<(Document, f64)>,
    pub cutoff: usize,
}

impl RankedList {
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.entries.iter().map(|(doc, _)| doc)
    }
}

/// Ranks `documents` against the question by embedding cosine similarity and
/// keeps the top `cutoff`. Ties preserve the incoming (retrieval) order, so
/// ranking is deterministic for any input.
pub fn rank_documents(
    question: &Question,
    documents: &[Document],
    provider: &dyn EmbeddingProvider,
    cutoff: usize,
) -> Result<RankedList, RerankError> {
    if documents.is_empty() {
        return Err(RerankError::InvalidRequest("no documents to rank".into()));
    }
    if cutoff == 0 {
        return Err(RerankError::InvalidRequest("cutoff must be positive".into()));
    }
    let question_vec = embed_one(provider, &question.body)?;
    let doc_texts: Vec<String> = documents
        .iter()
        .map(|doc| {
            let joined = join_title_abstract(doc);
            truncate_for_embedding(&joined, provider).to_string()
        })
        .collect();
    let doc_vecs = provider.embed(&doc_texts)?;
    if doc_vecs.len() != doc_texts.len() {
        return Err(RerankError::CountMismatch {
            expected: doc_texts.len(),
            got: doc_vecs.len(),
        });
    }
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(documents.len());
    for (index, vec) in doc_vecs.iter().enumerate() {
        scored.push((index, cosine(&question_vec, vec)?));
    }
    scored.sort_by(|(ia, sa), (ib, sb)| {
        sb.partial_cmp(sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ia.cmp(ib))
    });
    let entries = scored
        .into_iter()
        .take(cutoff)
        .map(|(index, score)| {
            let mut doc = documents[index].clone();
            doc.score = Some(score);
            (doc, score)
        })
        .collect();
    Ok(RankedList { entries, cutoff })
}

pub(crate) fn join_title_abstract(doc: &Document) -> String {
    if doc.abstract_text.is_empty() {
        doc.title.clone()
    } else if doc.title.is_empty() {
        doc.abstract_text.clone()
    } else {
        format!("{} {}", doc.title, doc.abstract_text)
    }
}

pub(crate) fn embed_one(
    provider: &dyn EmbeddingProvider,
    text: &str,
) -> Result<Vec<f64>, RerankError> {
    let input = vec![truncate_for_embedding(text, provider).to_string()];
    let mut vectors = provider.embed(&input)?;
    if vectors.len() != 1 {
        return Err(RerankError::CountMismatch {
            expected: 1,
            got: vectors.len(),
        });
    }
    Ok(vectors.pop().unwrap())
}
