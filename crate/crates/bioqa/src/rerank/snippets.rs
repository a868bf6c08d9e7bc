//! Sentence segmentation and best-sentence snippet extraction.
//!
//! Abstracts are split on a run of sentence terminators (`.`, `!`, `?`)
//! followed by whitespace and an uppercase letter — a rule chosen over naive
//! period splitting so abbreviations ("e.g.") and decimal numbers ("3.5 mg")
//! do not break sentences. Offsets count Unicode scalar values and always
//! reproduce the stored text exactly.

use super::{cosine, embed_one, truncate_for_embedding, EmbeddingProvider, RankedList, RerankError};
use crate::model::{Document, Question, Section, Snippet};

/// Splits a document into candidate snippets: one spanning the whole (trimmed)
/// title plus one per abstract sentence. Empty sections yield no candidates.
pub fn split_sentences(document: &Document) -> Vec<Snippet> {
    let mut snippets = Vec::new();
    if let Some((begin, end, text)) = trimmed_char_span(&document.title, 0, None) {
        snippets.push(Snippet {
            pmid: document.pmid.clone(),
            text,
            begin_section: Section::Title,
            end_section: Section::Title,
            offset_begin: begin,
            offset_end: end,
            score: None,
        });
    }
    let chars: Vec<char> = document.abstract_text.chars().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        if is_terminator(chars[i]) {
            let mut last = i;
            while last + 1 < chars.len() && is_terminator(chars[last + 1]) {
                last += 1;
            }
            let mut next = last + 1;
            while next < chars.len() && chars[next].is_whitespace() {
                next += 1;
            }
            let splits = next >= chars.len() || (next > last + 1 && chars[next].is_uppercase());
            if splits {
                push_sentence(document, &chars, start, last + 1, &mut snippets);
                start = next;
                i = next;
                continue;
            }
            i = last + 1;
            continue;
        }
        i += 1;
    }
    if start < chars.len() {
        push_sentence(document, &chars, start, chars.len(), &mut snippets);
    }
    snippets
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn push_sentence(
    document: &Document,
    chars: &[char],
    begin: usize,
    end: usize,
    snippets: &mut Vec<Snippet>,
) {
    let segment: String = chars[begin..end].iter().collect();
    if let Some((b, e, text)) = trimmed_char_span(&segment, begin, None) {
        snippets.push(Snippet {
            pmid: document.pmid.clone(),
            text,
            begin_section: Section::Abstract,
            end_section: Section::Abstract,
            offset_begin: b,
            offset_end: e,
            score: None,
        });
    }
}

/// Trims whitespace from `text` and returns `(begin, end, trimmed)` with
/// offsets in characters, shifted by `base`. `None` when nothing remains.
fn trimmed_char_span(text: &str, base: usize, _max: Option<usize>) -> Option<(usize, usize, String)> {
    let chars: Vec<char> = text.chars().collect();
    let begin = chars.iter().position(|c| !c.is_whitespace())?;
    let end = chars.len() - chars.iter().rev().position(|c| !c.is_whitespace()).unwrap();
    let trimmed: String = chars[begin..end].iter().collect();
    Some((base + begin, base + end, trimmed))
}

/// Picks the best snippet of each ranked document: every candidate sentence is
/// embedded and the one most similar to the question wins, earliest candidate
/// on ties (the title counts as the earliest). Documents without any text are
/// skipped, so the result can be shorter than the ranked list. Snippet order
/// follows document rank order.
pub fn extract_snippets(
    question: &Question,
    ranked: &RankedList,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Snippet>, RerankError> {
    let question_vec = embed_one(provider, &question.body)?;
    let mut candidates_per_doc: Vec<Vec<Snippet>> = Vec::with_capacity(ranked.entries.len());
    let mut texts: Vec<String> = Vec::new();
    for (document, _) in &ranked.entries {
        let candidates = split_sentences(document);
        for candidate in &candidates {
            texts.push(truncate_for_embedding(&candidate.text, provider).to_string());
        }
        candidates_per_doc.push(candidates);
    }
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let vectors = provider.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(RerankError::CountMismatch {
            expected: texts.len(),
            got: vectors.len(),
        });
    }
    let mut result = Vec::new();
    let mut offset = 0usize;
    for candidates in candidates_per_doc {
        let count = candidates.len();
        let mut best: Option<(usize, f64)> = None;
        for (index, vector) in vectors[offset..offset + count].iter().enumerate() {
            let score = cosine(&question_vec, vector)?;
            let better = match best {
                None => true,
                Some((_, best_score)) => score > best_score,
            };
            if better {
                best = Some((index, score));
            }
        }
        if let Some((index, score)) = best {
            let mut snippet = candidates[index].clone();
            snippet.score = Some(score);
            result.push(snippet);
        }
        offset += count;
    }
    Ok(result)
}
