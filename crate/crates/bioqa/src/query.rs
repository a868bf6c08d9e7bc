//! Query construction: turns a question into a PubMed search query.
//!
//! Three strategies are supported. Keyword extraction prompts an LLM with
//! few-shot examples and joins the returned keywords with `AND`; the
//! dictionary variant extracts entities with a gazetteer instead of an LLM;
//! direct generation asks the LLM for a finished query string. Whenever a
//! strategy yields nothing usable the raw question body becomes the query, so
//! retrieval always has something to search with.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::llm::{CompletionRequest, Gateway, LlmError};
use crate::model::Question;
use crate::qa::render_template;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("no keywords extracted")]
    NoKeywords,
    #[error("entity dictionary: {0}")]
    Dictionary(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// How the search query is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryStrategy {
    /// Few-shot LLM keyword extraction joined with `AND`.
    KeywordLlm,
    /// Dictionary-based entity extraction joined with `AND`.
    KeywordDictionary,
    /// The LLM writes the full query directly.
    DirectGeneration,
}

impl QueryStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryStrategy::KeywordLlm => "keyword-llm",
            QueryStrategy::KeywordDictionary => "keyword-dictionary",
            QueryStrategy::DirectGeneration => "direct",
        }
    }
}

impl FromStr for QueryStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keyword-llm" => Ok(QueryStrategy::KeywordLlm),
            "keyword-dictionary" => Ok(QueryStrategy::KeywordDictionary),
            "direct" => Ok(QueryStrategy::DirectGeneration),
            other => Err(format!(
                "unknown query strategy {other:?} (expected keyword-llm, keyword-dictionary, or direct)"
            )),
        }
    }
}

impl fmt::Display for QueryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a query's text came from; recorded so runs can report how often the
/// fallback fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryProvenance {
    StrategyBuilt,
    FallbackQuestionBody,
}

/// A ready-to-send PubMed query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PubmedQuery {
    pub text: String,
    pub provenance: QueryProvenance,
}

impl PubmedQuery {
    pub fn fallback(question: &Question) -> Self {
        PubmedQuery {
            text: question.body.clone(),
            provenance: QueryProvenance::FallbackQuestionBody,
        }
    }
}

/// Extracts domain entities from free text.
pub trait EntityExtractor: Send + Sync {
    fn extract(&self, text: &str) -> Vec<String>;
}

/// Gazetteer-backed extractor: case-insensitive, word-boundary matching with
/// longest-match-wins overlap resolution. Matches are returned in order of
/// appearance using the dictionary's canonical spelling.
pub struct DictionaryExtractor {
    terms: Vec<String>,
}

impl DictionaryExtractor {
    pub fn new(terms: impl IntoIterator<Item = String>) -> Self {
        let mut terms: Vec<String> = terms
            .into_iter()
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .collect();
        // Longest first so greedy selection prefers more specific terms.
        terms.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        terms.dedup_by(|a, b| a.eq_ignore_ascii_case(b));
        DictionaryExtractor { terms }
    }

    /// Loads one term per line; blank lines and `#` comments are skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, QueryError> {
        let content = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            QueryError::Dictionary(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Ok(Self::new(
            content
                .lines()
                .map(str::trim)
                .filter(|line| !line.is_empty() && !line.starts_with('#'))
                .map(String::from),
        ))
    }

    fn find_matches(&self, text: &str) -> Vec<(usize, usize, &str)> {
        let haystack = text.to_lowercase();
        let mut spans: Vec<(usize, usize, &str)> = Vec::new();
        for term in &self.terms {
            let needle = term.to_lowercase();
            let mut from = 0;
            while let Some(rel) = haystack[from..].find(&needle) {
                let start = from + rel;
                let end = start + needle.len();
                if on_word_boundary(&haystack, start, end) {
                    spans.push((start, end, term.as_str()));
                }
                from = start + needle.len().max(1);
            }
        }
        spans.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut selected: Vec<(usize, usize, &str)> = Vec::new();
        for span in spans {
            if selected.last().is_none_or(|last| span.0 >= last.1) {
                selected.push(span);
            }
        }
        selected
    }
}

fn on_word_boundary(text: &str, start: usize, end: usize) -> bool {
    let before_ok = start == 0
        || text[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
    let after_ok = end == text.len()
        || text[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
    before_ok && after_ok
}

impl EntityExtractor for DictionaryExtractor {
    fn extract(&self, text: &str) -> Vec<String> {
        let mut entities: Vec<String> = Vec::new();
        for (_, _, term) in self.find_matches(text) {
            if !entities.iter().any(|e| e.eq_ignore_ascii_case(term)) {
                entities.push(term.to_string());
            }
        }
        entities
    }
}

/// The two query-construction prompt templates.
#[derive(Debug, Clone)]
pub struct QueryTemplates {
    pub keyword: String,
    pub direct: String,
}

impl QueryTemplates {
    pub fn embedded() -> Self {
        QueryTemplates {
            keyword: include_str!("../templates/keyword.txt").to_string(),
            direct: include_str!("../templates/direct_query.txt").to_string(),
        }
    }

    /// Loads `keyword.txt` / `direct_query.txt` from a directory, keeping the
    /// embedded default for any file that is absent.
    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        let mut templates = Self::embedded();
        let dir = dir.as_ref();
        if let Ok(text) = std::fs::read_to_string(dir.join("keyword.txt")) {
            templates.keyword = text;
        }
        if let Ok(text) = std::fs::read_to_string(dir.join("direct_query.txt")) {
            templates.direct = text;
        }
        templates
    }
}

impl Default for QueryTemplates {
    fn default() -> Self {
        Self::embedded()
    }
}

/// Renders the keyword-extraction prompt for a question.
pub fn build_keyword_prompt(templates: &QueryTemplates, question: &Question) -> String {
    render_template(
        &templates.keyword,
        &[
            ("question body", question.body.as_str()),
            ("question_body", question.body.as_str()),
        ],
    )
}

/// Renders the direct query-generation prompt for a question.
pub fn build_direct_query_prompt(templates: &QueryTemplates, question: &Question) -> String {
    render_template(&templates.direct, &[("body", question.body.as_str())])
}

/// Parses an LLM keyword completion: the first line, split on commas, each
/// keyword trimmed, empties dropped.
pub fn parse_keywords(completion: &str) -> Vec<String> {
    let first_line = completion.lines().next().unwrap_or("");
    first_line
        .split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(String::from)
        .collect()
}

/// Joins keywords with `AND` into a strategy-built query.
pub fn keywords_to_query(keywords: &[String]) -> Result<PubmedQuery, QueryError> {
    if keywords.is_empty() {
        return Err(QueryError::NoKeywords);
    }
    Ok(PubmedQuery {
        text: keywords.join(" AND "),
        provenance: QueryProvenance::StrategyBuilt,
    })
}

/// Parses a direct-generation completion: the first nonempty line, trimmed.
/// A completion with no usable line yields `None`.
pub fn parse_direct_query(completion: &str) -> Option<PubmedQuery> {
    completion
        .lines()
        .map(str::trim)
        .find(|line| !line.is_empty())
        .map(|line| PubmedQuery {
            text: line.to_string(),
            provenance: QueryProvenance::StrategyBuilt,
        })
}

/// Builds the query for a question under the chosen strategy, falling back to
/// the question body when the strategy produces nothing.
pub fn build_query(
    question: &Question,
    strategy: QueryStrategy,
    gateway: &Gateway,
    extractor: Option<&dyn EntityExtractor>,
    templates: &QueryTemplates,
) -> Result<PubmedQuery, QueryError> {
    let query = match strategy {
        QueryStrategy::KeywordLlm => {
            let prompt = build_keyword_prompt(templates, question);
            let request = CompletionRequest::new(prompt)
                .with_stop("###")
                .with_max_tokens(200);
            let response = gateway.complete(&request)?;
            let keywords = parse_keywords(&response.text);
            keywords_to_query(&keywords).ok()
        }
        QueryStrategy::KeywordDictionary => {
            let extractor = extractor.ok_or_else(|| {
                QueryError::Dictionary("no entity dictionary configured".into())
            })?;
            keywords_to_query(&extractor.extract(&question.body)).ok()
        }
        QueryStrategy::DirectGeneration => {
            let prompt = build_direct_query_prompt(templates, question);
            let request = CompletionRequest::new(prompt)
                .with_stop("###")
                .with_max_tokens(200);
            let response = gateway.complete(&request)?;
            parse_direct_query(&response.text)
        }
    };
    Ok(query.unwrap_or_else(|| PubmedQuery::fallback(question)))
}
