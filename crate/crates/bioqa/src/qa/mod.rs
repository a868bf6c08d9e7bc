//! Question answering: few-shot prompting with resampling, majority voting
//! for yes/no questions, and synonym grouping for list questions.
//!
//! Every LLM call goes through [`crate::llm::Gateway::complete_with_resample`]
//! with a type-specific validator, so malformed completions are redrawn up to
//! the configured attempt budget. When the budget runs out the engine degrades
//! instead of failing: it emits a schema-valid answer (yes/no defaults to
//! "yes"), records a warning, and marks the completion record invalid.

mod context;
mod parse;
mod template;

pub use context::{form_context, ContextPolicy};
pub use parse::{
    extract_entities, majority_vote, normalize_yesno, parse_groups, parse_response, Defect,
    ParsedResponse,
};
pub use template::{
    build_grouping_prompt, build_prompt, render_template, terminal_marker, PromptLibrary,
};

use thiserror::Error;

use crate::llm::{CompletionRequest, CompletionResponse, Gateway, LlmError, ResamplePolicy};
use crate::model::{AnswerSet, ExactAnswer, Question, QuestionType, Snippet, YesNo};
use crate::util::sha256_hex;

#[derive(Debug, Error)]
pub enum QaError {
    #[error("prompt template: {0}")]
    Template(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Knobs for the answering strategies. The defaults match the shipped
/// configuration: voting on, grouping off, three attempts per completion,
/// 200-token completions stopped at `###`, contexts from the first 1000 words
/// of the top ten snippets.
#[derive(Debug, Clone)]
pub struct QaConfig {
    /// Answer yes/no questions by majority vote over three per-snippet prompts.
    pub vote_yesno: bool,
    /// Answer list questions through per-snippet prompts plus synonym grouping.
    pub group_list: bool,
    /// Completion attempts per prompt before degrading.
    pub max_attempts: u32,
    pub max_tokens: u32,
    pub stop: String,
    pub context_word_limit: usize,
    pub context_snippet_count: usize,
}

impl Default for QaConfig {
    fn default() -> Self {
        QaConfig {
            vote_yesno: true,
            group_list: false,
            max_attempts: 3,
            max_tokens: 200,
            stop: "###".into(),
            context_word_limit: 1000,
            context_snippet_count: 10,
        }
    }
}

/// One completion in the run log: which prompt (by hash), which purpose, how
/// many attempts it took, and the defects of the final response.
#[derive(Debug, Clone)]
pub struct CompletionRecord {
    pub purpose: String,
    pub prompt_sha256: String,
    pub attempt: u32,
    pub valid: bool,
    pub defects: Vec<String>,
}

/// The outcome of answering one question.
#[derive(Debug)]
pub struct QaOutcome {
    pub answer: AnswerSet,
    pub records: Vec<CompletionRecord>,
    pub warnings: Vec<String>,
}

/// Answers a question from its ranked snippets. Dispatches on question type
/// and the configured strategies; never fails on malformed LLM output, only on
/// broken templates or transport-level errors.
pub fn answer_question(
    question: &Question,
    snippets: &[Snippet],
    gateway: &Gateway,
    library: &PromptLibrary,
    config: &QaConfig,
) -> Result<QaOutcome, QaError> {
    match question.qtype {
        QuestionType::YesNo if config.vote_yesno => {
            answer_yesno_by_vote(question, snippets, gateway, library, config)
        }
        QuestionType::List if config.group_list && !snippets.is_empty() => {
            answer_list_with_grouping(question, snippets, gateway, library, config)
        }
        _ => answer_single_prompt(question, snippets, gateway, library, config),
    }
}

/// The single-prompt path: one completion over the prefix-words context.
fn answer_single_prompt(
    question: &Question,
    snippets: &[Snippet],
    gateway: &Gateway,
    library: &PromptLibrary,
    config: &QaConfig,
) -> Result<QaOutcome, QaError> {
    let policy = ContextPolicy::PrefixWords {
        word_limit: config.context_word_limit,
        snippet_count: config.context_snippet_count,
    };
    let context = form_context(snippets, &policy);
    let prompt = build_prompt(library, question.qtype, &context, &question.body)?;
    let qtype = question.qtype;
    let resample = ResamplePolicy::new(config.max_attempts, move |text| accepts(qtype, text));
    let request = base_request(config, prompt);
    let response = gateway.complete_with_resample(&request, &resample)?;
    let parsed = parse_response(qtype, &response.text);
    let mut records = vec![record("answer", &request.prompt, &response, &parsed)];
    let mut warnings = Vec::new();
    let answer = match qtype {
        QuestionType::YesNo => {
            let label = parsed.exact_raw.as_deref().and_then(normalize_yesno);
            let exact = match label {
                Some(label) => label,
                None => {
                    warnings.push(degraded_warning(question, config, "yes/no", Some("yes")));
                    YesNo::Yes
                }
            };
            AnswerSet {
                ideal: ideal_or_fallback(&parsed, &response, &mut warnings, question, config),
                exact: ExactAnswer::YesNo(exact),
            }
        }
        QuestionType::Factoid | QuestionType::List => {
            let mut entities = parsed
                .exact_raw
                .as_deref()
                .map(extract_entities)
                .unwrap_or_default();
            if qtype == QuestionType::Factoid {
                entities.truncate(5);
            }
            if entities.is_empty() {
                warnings.push(degraded_warning(question, config, "entity", None));
            }
            AnswerSet {
                ideal: ideal_or_fallback(&parsed, &response, &mut warnings, question, config),
                exact: ExactAnswer::Entities(entities),
            }
        }
        QuestionType::Summary => AnswerSet {
            ideal: ideal_or_fallback(&parsed, &response, &mut warnings, question, config),
            exact: ExactAnswer::None,
        },
    };
    if !response.valid && warnings.is_empty() {
        warnings.push(degraded_warning(question, config, "answer", None));
    }
    records[0].valid = response.valid;
    Ok(QaOutcome {
        answer,
        records,
        warnings,
    })
}

/// Yes/no by majority vote: up to three prompts, each with one snippet as its
/// context, each resampled independently. Votes come from every response whose
/// exact answer parses to yes/no; the ideal answer is the first usable one.
fn answer_yesno_by_vote(
    question: &Question,
    snippets: &[Snippet],
    gateway: &Gateway,
    library: &PromptLibrary,
    config: &QaConfig,
) -> Result<QaOutcome, QaError> {
    let contexts: Vec<String> = if snippets.is_empty() {
        vec![String::new()]
    } else {
        (0..snippets.len().min(3))
            .map(|i| form_context(snippets, &ContextPolicy::PerSnippet(i)))
            .collect()
    };
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut votes = Vec::new();
    let mut ideal: Option<String> = None;
    let mut first_text: Option<String> = None;
    for (index, context) in contexts.iter().enumerate() {
        let prompt = build_prompt(library, QuestionType::YesNo, context, &question.body)?;
        let resample = ResamplePolicy::new(config.max_attempts, |text| {
            accepts(QuestionType::YesNo, text)
        });
        let request = base_request(config, prompt);
        let response = gateway.complete_with_resample(&request, &resample)?;
        let parsed = parse_response(QuestionType::YesNo, &response.text);
        records.push(record(
            &format!("yesno-vote-{}", index + 1),
            &request.prompt,
            &response,
            &parsed,
        ));
        if let Some(label) = parsed.exact_raw.as_deref().and_then(normalize_yesno) {
            votes.push(label);
        }
        if ideal.is_none() && !parsed.ideal.is_empty() {
            ideal = Some(parsed.ideal.clone());
        }
        if first_text.is_none() && !response.text.trim().is_empty() {
            first_text = Some(response.text.trim().to_string());
        }
    }
    let exact = if votes.is_empty() {
        warnings.push(degraded_warning(question, config, "yes/no", Some("yes")));
        YesNo::Yes
    } else {
        let yes = votes.iter().filter(|v| **v == YesNo::Yes).count();
        if yes * 2 == votes.len() {
            warnings.push(format!(
                "question {}: yes/no vote tied {yes}-{yes}; resolved to \"yes\"",
                question.id
            ));
        }
        majority_vote(&votes)
    };
    let ideal = ideal
        .or(first_text)
        .unwrap_or_else(|| "No answer generated.".to_string());
    Ok(QaOutcome {
        answer: AnswerSet {
            ideal,
            exact: ExactAnswer::YesNo(exact),
        },
        records,
        warnings,
    })
}

/// List answering with synonym grouping: one prompt per snippet (up to five),
/// entities from all responses aggregated (duplicates across responses kept),
/// then one grouping prompt whose groups' first members become the answer.
/// When the grouping completion never parses, the deduplicated aggregate is
/// used instead.
pub fn answer_list_with_grouping(
    question: &Question,
    snippets: &[Snippet],
    gateway: &Gateway,
    library: &PromptLibrary,
    config: &QaConfig,
) -> Result<QaOutcome, QaError> {
    if snippets.is_empty() {
        return Err(QaError::Precondition(
            "synonym grouping needs at least one snippet".into(),
        ));
    }
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut aggregate: Vec<String> = Vec::new();
    let mut ideal: Option<String> = None;
    let mut first_text: Option<String> = None;
    for index in 0..snippets.len().min(5) {
        let context = form_context(snippets, &ContextPolicy::PerSnippet(index));
        let prompt = build_prompt(library, QuestionType::List, &context, &question.body)?;
        let resample = ResamplePolicy::new(config.max_attempts, |text| {
            accepts(QuestionType::List, text)
        });
        let request = base_request(config, prompt);
        let response = gateway.complete_with_resample(&request, &resample)?;
        let parsed = parse_response(QuestionType::List, &response.text);
        records.push(record(
            &format!("list-snippet-{}", index + 1),
            &request.prompt,
            &response,
            &parsed,
        ));
        if let Some(raw) = parsed.exact_raw.as_deref() {
            aggregate.extend(extract_entities(raw));
        }
        if ideal.is_none() && !parsed.ideal.is_empty() {
            ideal = Some(parsed.ideal.clone());
        }
        if first_text.is_none() && !response.text.trim().is_empty() {
            first_text = Some(response.text.trim().to_string());
        }
    }
    let entities = if aggregate.is_empty() {
        warnings.push(degraded_warning(question, config, "entity", None));
        Vec::new()
    } else {
        let entity_list = aggregate.join("; ");
        let prompt = build_grouping_prompt(library, &entity_list)?;
        let resample =
            ResamplePolicy::new(config.max_attempts, |text| !parse_groups(text).is_empty());
        let request = base_request(config, prompt);
        let response = gateway.complete_with_resample(&request, &resample)?;
        let groups = parse_groups(&response.text);
        records.push(CompletionRecord {
            purpose: "grouping".into(),
            prompt_sha256: sha256_hex(request.prompt.as_bytes()),
            attempt: response.attempt,
            valid: response.valid,
            defects: Vec::new(),
        });
        if response.valid {
            dedup_case_insensitive(groups.iter().map(|group| group[0].clone()))
        } else {
            warnings.push(format!(
                "question {}: synonym grouping produced no parseable groups after {} attempts; \
                 using the ungrouped entity list",
                question.id, config.max_attempts
            ));
            dedup_case_insensitive(aggregate.iter().cloned())
        }
    };
    let ideal = ideal
        .or(first_text)
        .unwrap_or_else(|| "No answer generated.".to_string());
    Ok(QaOutcome {
        answer: AnswerSet {
            ideal,
            exact: ExactAnswer::Entities(entities),
        },
        records,
        warnings,
    })
}

/// Acceptance test used while resampling: the response must be free of format
/// defects, and entity questions must yield at least one entity.
fn accepts(qtype: QuestionType, text: &str) -> bool {
    let parsed = parse_response(qtype, text);
    if !parsed.wellformed() {
        return false;
    }
    match qtype {
        QuestionType::Factoid | QuestionType::List => parsed
            .exact_raw
            .as_deref()
            .is_some_and(|raw| !extract_entities(raw).is_empty()),
        _ => true,
    }
}

fn base_request(config: &QaConfig, prompt: String) -> CompletionRequest {
    CompletionRequest::new(prompt)
        .with_stop(config.stop.clone())
        .with_max_tokens(config.max_tokens)
}

fn record(
    purpose: &str,
    prompt: &str,
    response: &CompletionResponse,
    parsed: &ParsedResponse,
) -> CompletionRecord {
    CompletionRecord {
        purpose: purpose.to_string(),
        prompt_sha256: sha256_hex(prompt.as_bytes()),
        attempt: response.attempt,
        valid: response.valid,
        defects: parsed.defects.iter().map(|d| d.code().to_string()).collect(),
    }
}

fn ideal_or_fallback(
    parsed: &ParsedResponse,
    response: &CompletionResponse,
    warnings: &mut Vec<String>,
    question: &Question,
    config: &QaConfig,
) -> String {
    if !parsed.ideal.is_empty() {
        return parsed.ideal.clone();
    }
    let text = response.text.trim();
    if !text.is_empty() {
        return text.to_string();
    }
    warnings.push(format!(
        "question {}: no ideal answer after {} attempts; emitting a placeholder",
        question.id, config.max_attempts
    ));
    "No answer generated.".to_string()
}

fn degraded_warning(
    question: &Question,
    config: &QaConfig,
    what: &str,
    default: Option<&str>,
) -> String {
    match default {
        Some(default) => format!(
            "question {}: no usable {what} answer after {} attempts; defaulting to {default:?}",
            question.id, config.max_attempts
        ),
        None => format!(
            "question {}: no usable {what} answer after {} attempts; emitting a degraded answer",
            question.id, config.max_attempts
        ),
    }
}

fn dedup_case_insensitive(entities: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for entity in entities {
        if !out.iter().any(|e| e.eq_ignore_ascii_case(&entity)) {
            out.push(entity);
        }
    }
    out
}
