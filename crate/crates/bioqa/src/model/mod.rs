//! Core domain types: questions, documents, snippets, and answers.
//!
//! These types are deliberately serde-free; the JSON interchange format lives
//! in [`io`] so wire-format concerns stay out of the domain model.

mod types;
pub mod io;

pub use types::{
    AnswerSet, Document, ExactAnswer, GoldExact, GoldenRecord, ModelError, Prediction,
    PredictionRecord, Question, QuestionType, RawExact, Section, Snippet, YesNo,
};

/// URL prefix under which PubMed abstracts are published; prediction files
/// reference documents by `PUBMED_URL_PREFIX + pmid`.
pub const PUBMED_URL_PREFIX: &str = "http://www.ncbi.nlm.nih.gov/pubmed/";

/// Extracts a pmid from a document reference, which may be a bare pmid or a
/// PubMed URL (`http://` or `https://`, optional trailing slash).
pub fn pmid_from_doc_ref(reference: &str) -> Option<String> {
    let trimmed = reference.trim().trim_end_matches('/');
    let candidate = match trimmed.rsplit_once('/') {
        Some((_, tail)) => tail,
        None => trimmed,
    };
    if !candidate.is_empty() && candidate.bytes().all(|b| b.is_ascii_digit()) {
        Some(candidate.to_string())
    } else {
        None
    }
}
