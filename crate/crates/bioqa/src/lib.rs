//! Retrieval-augmented question answering over the PubMed corpus.
//!
//! The crate is organized as a pipeline of independent stages:
//!
//! * [`model`] — question / document / snippet / answer types and the JSON
//!   interchange format used for inputs, predictions, and golden files.
//! * [`query`] — turns a natural-language question into a PubMed search query,
//!   either by LLM keyword extraction, dictionary-based entity extraction, or
//!   direct query generation.
//! * [`pubmed`] — E-utilities client (esearch/efetch) with on-disk response
//!   caching, rate limiting, and retries.
//! * [`rerank`] — embedding-based document ranking and best-sentence snippet
//!   extraction.
//! * [`llm`] — completion gateway with stop-sequence handling, bounded
//!   concurrency, retries, and resampling; includes a deterministic mock
//!   provider for offline runs.
//! * [`qa`] — few-shot prompt construction, response parsing, majority voting
//!   for yes/no questions, and synonym grouping for list questions.
//! * [`eval`] — ranking and answer metrics (MAP, macro-F1, MRR, list F1)
//!   against golden annotations.
//! * [`pipeline`] — phase orchestration (retrieve / answer / evaluate) plus
//!   run manifests; [`config`] holds the file-backed settings it runs from.

pub mod config;
pub mod eval;
pub mod llm;
pub mod model;
pub mod pipeline;
pub mod pubmed;
pub mod qa;
pub mod query;
pub mod rerank;
pub mod store;
pub mod util;

pub use model::{
    AnswerSet, Document, ExactAnswer, GoldenRecord, Question, QuestionType, Section, Snippet,
    YesNo,
};
