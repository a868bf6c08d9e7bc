//! JSON interchange: question batches, golden annotations, and prediction
//! files all share one envelope — an object with a `questions` array.
//!
//! Readers walk the JSON tree by hand so malformed entries can be reported by
//! index; unknown fields are ignored everywhere. The writer serializes typed
//! structs so field order (and therefore output bytes) is stable.

use std::io::{Read, Write};

use serde::Serialize;
use serde_json::Value;

use super::types::{
    GoldExact, GoldenRecord, ModelError, Prediction, PredictionRecord, Question, QuestionType,
    RawExact, Section, Snippet, YesNo,
};
use super::{pmid_from_doc_ref, PUBMED_URL_PREFIX};

/// Reads a question batch: only `id`, `type`, and `body` are consulted.
pub fn read_questions(reader: impl Read) -> Result<Vec<Question>, ModelError> {
    let entries = question_entries(reader)?;
    entries
        .iter()
        .enumerate()
        .map(|(index, entry)| parse_question(index, entry))
        .collect()
}

/// Reads a fully annotated file: golden data or a previous stage's output.
/// Annotation fields (`documents`, `snippets`, `ideal_answer`, `exact_answer`)
/// are each optional; present fields must be well-formed.
pub fn read_golden(reader: impl Read) -> Result<Vec<GoldenRecord>, ModelError> {
    let entries = question_entries(reader)?;
    entries
        .iter()
        .enumerate()
        .map(|(index, entry)| {
            let question = parse_question(index, entry)?;
            let gold_documents = parse_documents(index, entry)?;
            let gold_snippets = parse_snippets(index, entry)?;
            let gold_ideal = parse_ideal_list(index, entry)?;
            let gold_exact = parse_gold_exact(index, entry, question.qtype)?;
            Ok(GoldenRecord {
                question,
                gold_documents,
                gold_snippets,
                gold_ideal,
                gold_exact,
            })
        })
        .collect()
}

/// Reads a prediction file for evaluation. Only `id` is required per entry;
/// the exact answer is kept in raw shape because interpreting it needs the
/// golden question type.
pub fn read_predictions(reader: impl Read) -> Result<Vec<PredictionRecord>, ModelError> {
    let entries = question_entries(reader)?;
    entries
        .iter()
        .enumerate()
        .map(|(index, entry)| {
            let id = require_str(index, entry, "id")?;
            let documents = parse_documents(index, entry)?;
            let snippets = parse_snippets(index, entry)?;
            let ideal = match entry.get("ideal_answer") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(Value::Array(items)) => items.iter().find_map(|v| match v {
                    Value::String(s) => Some(s.clone()),
                    _ => None,
                }),
                Some(other) => {
                    return Err(entry_error(
                        index,
                        format!("ideal_answer must be a string or array, got {}", kind(other)),
                    ))
                }
            };
            let exact = parse_raw_exact(index, entry)?;
            Ok(PredictionRecord {
                id: id.to_string(),
                documents,
                snippets,
                ideal,
                exact,
            })
        })
        .collect()
}

/// Writes predictions in the interchange format. Every entry must carry at
/// most ten documents and ten snippets; callers truncate beforehand.
pub fn write_predictions(
    mut writer: impl Write,
    predictions: &[Prediction],
) -> Result<(), ModelError> {
    let mut questions = Vec::with_capacity(predictions.len());
    for prediction in predictions {
        if prediction.documents.len() > 10 {
            return Err(ModelError::Validation(format!(
                "question {}: {} documents exceed the limit of 10",
                prediction.question.id,
                prediction.documents.len()
            )));
        }
        if prediction.snippets.len() > 10 {
            return Err(ModelError::Validation(format!(
                "question {}: {} snippets exceed the limit of 10",
                prediction.question.id,
                prediction.snippets.len()
            )));
        }
        questions.push(QuestionOut::from(prediction));
    }
    let envelope = FileOut { questions };
    serde_json::to_writer_pretty(&mut writer, &envelope)?;
    writer.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct FileOut<'a> {
    questions: Vec<QuestionOut<'a>>,
}

#[derive(Serialize)]
struct QuestionOut<'a> {
    id: &'a str,
    #[serde(rename = "type")]
    qtype: &'static str,
    body: &'a str,
    documents: Vec<String>,
    snippets: Vec<SnippetOut<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ideal_answer: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_answer: Option<Value>,
}

#[derive(Serialize)]
struct SnippetOut<'a> {
    document: String,
    text: &'a str,
    #[serde(rename = "beginSection")]
    begin_section: &'static str,
    #[serde(rename = "endSection")]
    end_section: &'static str,
    #[serde(rename = "offsetInBeginSection")]
    offset_begin: usize,
    #[serde(rename = "offsetInEndSection")]
    offset_end: usize,
}

impl<'a> From<&'a Prediction> for QuestionOut<'a> {
    fn from(prediction: &'a Prediction) -> Self {
        let (ideal_answer, exact_answer) = match &prediction.answer {
            None => (None, None),
            Some(answer) => {
                let exact = match &answer.exact {
                    super::ExactAnswer::YesNo(label) => Some(Value::String(label.as_str().into())),
                    super::ExactAnswer::Entities(entities) => Some(Value::Array(
                        entities
                            .iter()
                            .map(|e| Value::Array(vec![Value::String(e.clone())]))
                            .collect(),
                    )),
                    super::ExactAnswer::None => None,
                };
                (Some(answer.ideal.as_str()), exact)
            }
        };
        QuestionOut {
            id: &prediction.question.id,
            qtype: prediction.question.qtype.as_str(),
            body: &prediction.question.body,
            documents: prediction
                .documents
                .iter()
                .map(|d| format!("{PUBMED_URL_PREFIX}{}", d.pmid))
                .collect(),
            snippets: prediction.snippets.iter().map(SnippetOut::from).collect(),
            ideal_answer,
            exact_answer,
        }
    }
}

impl<'a> From<&'a Snippet> for SnippetOut<'a> {
    fn from(snippet: &'a Snippet) -> Self {
        SnippetOut {
            document: format!("{PUBMED_URL_PREFIX}{}", snippet.pmid),
            text: &snippet.text,
            begin_section: snippet.begin_section.as_str(),
            end_section: snippet.end_section.as_str(),
            offset_begin: snippet.offset_begin,
            offset_end: snippet.offset_end,
        }
    }
}

fn question_entries(reader: impl Read) -> Result<Vec<Value>, ModelError> {
    let root: Value = serde_json::from_reader(reader)?;
    let questions = root
        .get("questions")
        .ok_or_else(|| ModelError::Validation("missing top-level \"questions\" array".into()))?;
    match questions {
        Value::Array(items) => Ok(items.clone()),
        other => Err(ModelError::Validation(format!(
            "\"questions\" must be an array, got {}",
            kind(other)
        ))),
    }
}

fn parse_question(index: usize, entry: &Value) -> Result<Question, ModelError> {
    if !entry.is_object() {
        return Err(entry_error(index, format!("expected an object, got {}", kind(entry))));
    }
    let id = require_str(index, entry, "id")?;
    let type_label = require_str(index, entry, "type")?;
    let qtype = QuestionType::parse(type_label)
        .ok_or_else(|| entry_error(index, format!("unknown question type {type_label:?}")))?;
    let body = require_str(index, entry, "body")?;
    Question::new(id, qtype, body).map_err(|e| entry_error(index, e.to_string()))
}

fn parse_documents(index: usize, entry: &Value) -> Result<Vec<String>, ModelError> {
    let Some(documents) = entry.get("documents") else {
        return Ok(Vec::new());
    };
    let Value::Array(items) = documents else {
        return Err(entry_error(
            index,
            format!("documents must be an array, got {}", kind(documents)),
        ));
    };
    let mut pmids: Vec<String> = Vec::with_capacity(items.len());
    for item in items {
        let Value::String(reference) = item else {
            return Err(entry_error(
                index,
                format!("document reference must be a string, got {}", kind(item)),
            ));
        };
        let pmid = pmid_from_doc_ref(reference)
            .ok_or_else(|| entry_error(index, format!("unrecognized document reference {reference:?}")))?;
        if !pmids.contains(&pmid) {
            pmids.push(pmid);
        }
    }
    Ok(pmids)
}

fn parse_snippets(index: usize, entry: &Value) -> Result<Vec<Snippet>, ModelError> {
    let Some(snippets) = entry.get("snippets") else {
        return Ok(Vec::new());
    };
    let Value::Array(items) = snippets else {
        return Err(entry_error(
            index,
            format!("snippets must be an array, got {}", kind(snippets)),
        ));
    };
    let mut result = Vec::with_capacity(items.len());
    for item in items {
        let reference = require_str(index, item, "document")?;
        let pmid = pmid_from_doc_ref(reference)
            .ok_or_else(|| entry_error(index, format!("unrecognized document reference {reference:?}")))?;
        let text = require_str(index, item, "text")?;
        let begin_label = require_str(index, item, "beginSection")?;
        let begin_section = Section::parse(begin_label)
            .ok_or_else(|| entry_error(index, format!("unknown section {begin_label:?}")))?;
        let end_label = require_str(index, item, "endSection")?;
        let end_section = Section::parse(end_label)
            .ok_or_else(|| entry_error(index, format!("unknown section {end_label:?}")))?;
        let offset_begin = require_offset(index, item, "offsetInBeginSection")?;
        let offset_end = require_offset(index, item, "offsetInEndSection")?;
        if offset_end < offset_begin {
            return Err(entry_error(
                index,
                format!("snippet offsets inverted: {offset_begin}..{offset_end}"),
            ));
        }
        result.push(Snippet {
            pmid,
            text: text.to_string(),
            begin_section,
            end_section,
            offset_begin,
            offset_end,
            score: None,
        });
    }
    Ok(result)
}

fn parse_ideal_list(index: usize, entry: &Value) -> Result<Vec<String>, ModelError> {
    match entry.get("ideal_answer") {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::String(s)) => Ok(vec![s.clone()]),
        Some(Value::Array(items)) => {
            let mut ideals = Vec::with_capacity(items.len());
            for item in items {
                let Value::String(s) = item else {
                    return Err(entry_error(
                        index,
                        format!("ideal_answer entries must be strings, got {}", kind(item)),
                    ));
                };
                ideals.push(s.clone());
            }
            Ok(ideals)
        }
        Some(other) => Err(entry_error(
            index,
            format!("ideal_answer must be a string or array, got {}", kind(other)),
        )),
    }
}

fn parse_gold_exact(
    index: usize,
    entry: &Value,
    qtype: QuestionType,
) -> Result<GoldExact, ModelError> {
    let raw = parse_raw_exact(index, entry)?;
    match qtype {
        QuestionType::Summary => Ok(GoldExact::None),
        QuestionType::YesNo => match raw {
            RawExact::Absent => Ok(GoldExact::None),
            RawExact::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "yes" => Ok(GoldExact::YesNo(YesNo::Yes)),
                "no" => Ok(GoldExact::YesNo(YesNo::No)),
                _ => Err(entry_error(
                    index,
                    format!("yes/no exact answer must be \"yes\" or \"no\", got {s:?}"),
                )),
            },
            _ => Err(entry_error(
                index,
                "yes/no exact answer must be a string".into(),
            )),
        },
        QuestionType::Factoid | QuestionType::List => {
            let groups = match raw {
                RawExact::Absent => Vec::new(),
                RawExact::Text(s) => vec![vec![s]],
                // A flat array is a synonym group for factoid questions and
                // one single-synonym group per string for list questions.
                RawExact::Flat(items) => match qtype {
                    QuestionType::Factoid => vec![items],
                    _ => items.into_iter().map(|s| vec![s]).collect(),
                },
                RawExact::Nested(groups) => groups,
            };
            let groups: Vec<Vec<String>> = groups
                .into_iter()
                .map(|group| {
                    group
                        .into_iter()
                        .filter(|s| !s.trim().is_empty())
                        .collect::<Vec<_>>()
                })
                .filter(|group: &Vec<String>| !group.is_empty())
                .collect();
            if groups.is_empty() {
                Ok(GoldExact::None)
            } else {
                Ok(GoldExact::Groups(groups))
            }
        }
    }
}

fn parse_raw_exact(index: usize, entry: &Value) -> Result<RawExact, ModelError> {
    match entry.get("exact_answer") {
        None | Some(Value::Null) => Ok(RawExact::Absent),
        Some(Value::String(s)) => Ok(RawExact::Text(s.clone())),
        Some(Value::Array(items)) => {
            if items.iter().all(|v| v.is_string()) {
                Ok(RawExact::Flat(
                    items
                        .iter()
                        .map(|v| v.as_str().unwrap_or_default().to_string())
                        .collect(),
                ))
            } else if items.iter().all(|v| v.is_array()) {
                let mut groups = Vec::with_capacity(items.len());
                for inner in items {
                    let Value::Array(members) = inner else { unreachable!() };
                    let mut group = Vec::with_capacity(members.len());
                    for member in members {
                        let Value::String(s) = member else {
                            return Err(entry_error(
                                index,
                                format!("exact_answer members must be strings, got {}", kind(member)),
                            ));
                        };
                        group.push(s.clone());
                    }
                    groups.push(group);
                }
                Ok(RawExact::Nested(groups))
            } else {
                Err(entry_error(
                    index,
                    "exact_answer array mixes strings and arrays".into(),
                ))
            }
        }
        Some(other) => Err(entry_error(
            index,
            format!("exact_answer must be a string or array, got {}", kind(other)),
        )),
    }
}

fn require_str<'a>(index: usize, entry: &'a Value, field: &str) -> Result<&'a str, ModelError> {
    match entry.get(field) {
        Some(Value::String(s)) => Ok(s),
        Some(other) => Err(entry_error(
            index,
            format!("field {field:?} must be a string, got {}", kind(other)),
        )),
        None => Err(entry_error(index, format!("missing field {field:?}"))),
    }
}

fn require_offset(index: usize, entry: &Value, field: &str) -> Result<usize, ModelError> {
    match entry.get(field) {
        Some(Value::Number(n)) => n
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| entry_error(index, format!("field {field:?} must be a non-negative integer"))),
        Some(other) => Err(entry_error(
            index,
            format!("field {field:?} must be an integer, got {}", kind(other)),
        )),
        None => Err(entry_error(index, format!("missing field {field:?}"))),
    }
}

fn entry_error(index: usize, reason: String) -> ModelError {
    ModelError::Entry { index, reason }
}

fn kind(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

#[cfg(test)]
mod tests {
    use super::super::types::{AnswerSet, Document, ExactAnswer};
    use super::*;

    fn sample_prediction() -> Prediction {
        Prediction {
            question: Question::new("55031181e9bde69634000014", QuestionType::YesNo, "Is ok?")
                .unwrap(),
            documents: vec![Document::new("23193287", "Title", "Abstract body.").unwrap()],
            snippets: vec![Snippet {
                pmid: "23193287".into(),
                text: "Abstract body.".into(),
                begin_section: Section::Abstract,
                end_section: Section::Abstract,
                offset_begin: 0,
                offset_end: 14,
                score: Some(0.9),
            }],
            answer: Some(AnswerSet {
                ideal: "Yes, it is.".into(),
                exact: ExactAnswer::YesNo(YesNo::Yes),
            }),
        }
    }

    #[test]
    fn read_questions_ignores_unknown_fields() {
        let json = r#"{"questions":[{"id":"q1","type":"summary","body":"What?","extra":[1,2]}],"other":true}"#;
        let questions = read_questions(json.as_bytes()).unwrap();
        assert_eq!(questions.len(), 1);
        assert_eq!(questions[0].qtype, QuestionType::Summary);
    }

    #[test]
    fn read_questions_names_offending_entry() {
        let json = r#"{"questions":[{"id":"q1","type":"summary","body":"ok"},{"id":"q2","type":"ranking","body":"bad"}]}"#;
        let err = read_questions(json.as_bytes()).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("entry 1"), "message was {message:?}");
        assert!(message.contains("ranking"), "message was {message:?}");
    }

    #[test]
    fn read_questions_requires_body() {
        let json = r#"{"questions":[{"id":"q1","type":"summary"}]}"#;
        let err = read_questions(json.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("body"));
    }

    #[test]
    fn write_then_read_round_trips() {
        let prediction = sample_prediction();
        let mut bytes = Vec::new();
        write_predictions(&mut bytes, std::slice::from_ref(&prediction)).unwrap();
        let records = read_predictions(bytes.as_slice()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].id, "55031181e9bde69634000014");
        assert_eq!(records[0].documents, vec!["23193287".to_string()]);
        assert_eq!(records[0].snippets[0].offset_end, 14);
        assert_eq!(records[0].ideal.as_deref(), Some("Yes, it is."));
        assert_eq!(records[0].exact, RawExact::Text("yes".into()));
    }

    #[test]
    fn write_is_byte_stable() {
        let prediction = sample_prediction();
        let mut first = Vec::new();
        let mut second = Vec::new();
        write_predictions(&mut first, std::slice::from_ref(&prediction)).unwrap();
        write_predictions(&mut second, std::slice::from_ref(&prediction)).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn write_renders_documents_as_urls_and_entities_nested() {
        let mut prediction = sample_prediction();
        prediction.question =
            Question::new("q2", QuestionType::List, "Which genes?").unwrap();
        prediction.answer = Some(AnswerSet {
            ideal: "Genes A and B.".into(),
            exact: ExactAnswer::Entities(vec!["A".into(), "B".into()]),
        });
        let mut bytes = Vec::new();
        write_predictions(&mut bytes, std::slice::from_ref(&prediction)).unwrap();
        let value: Value = serde_json::from_slice(&bytes).unwrap();
        let entry = &value["questions"][0];
        assert_eq!(
            entry["documents"][0],
            "http://www.ncbi.nlm.nih.gov/pubmed/23193287"
        );
        assert_eq!(entry["exact_answer"][0][0], "A");
        assert_eq!(entry["exact_answer"][1][0], "B");
        assert_eq!(entry["snippets"][0]["beginSection"], "abstract");
        assert_eq!(entry["snippets"][0]["offsetInEndSection"], 14);
    }

    #[test]
    fn write_omits_answer_fields_when_absent() {
        let mut prediction = sample_prediction();
        prediction.answer = None;
        let mut bytes = Vec::new();
        write_predictions(&mut bytes, std::slice::from_ref(&prediction)).unwrap();
        let value: Value = serde_json::from_slice(&bytes).unwrap();
        let entry = &value["questions"][0];
        assert!(entry.get("ideal_answer").is_none());
        assert!(entry.get("exact_answer").is_none());
        assert!(entry.get("documents").is_some());
    }

    #[test]
    fn write_rejects_more_than_ten_documents() {
        let mut prediction = sample_prediction();
        prediction.documents = (0..11)
            .map(|i| Document::new(format!("{}", 1000 + i), "t", "a").unwrap())
            .collect();
        let mut bytes = Vec::new();
        let err = write_predictions(&mut bytes, std::slice::from_ref(&prediction)).unwrap_err();
        assert!(err.to_string().contains("11 documents"));
    }

    #[test]
    fn read_golden_tolerates_missing_annotations() {
        let json = r#"{"questions":[{"id":"q1","type":"factoid","body":"Who?"}]}"#;
        let records = read_golden(json.as_bytes()).unwrap();
        assert!(records[0].gold_documents.is_empty());
        assert!(records[0].gold_snippets.is_empty());
        assert!(records[0].gold_ideal.is_empty());
        assert_eq!(records[0].gold_exact, GoldExact::None);
    }

    #[test]
    fn read_golden_interprets_exact_shapes() {
        let json = r#"{"questions":[
            {"id":"y","type":"yesno","body":"?","exact_answer":"Yes"},
            {"id":"f","type":"factoid","body":"?","exact_answer":["BRCA1","breast cancer 1"]},
            {"id":"l","type":"list","body":"?","exact_answer":[["a","a-syn"],["b"]]},
            {"id":"l2","type":"list","body":"?","exact_answer":["x","y"]}
        ]}"#;
        let records = read_golden(json.as_bytes()).unwrap();
        assert_eq!(records[0].gold_exact, GoldExact::YesNo(YesNo::Yes));
        assert_eq!(
            records[1].gold_exact,
            GoldExact::Groups(vec![vec!["BRCA1".into(), "breast cancer 1".into()]])
        );
        assert_eq!(
            records[2].gold_exact,
            GoldExact::Groups(vec![vec!["a".into(), "a-syn".into()], vec!["b".into()]])
        );
        assert_eq!(
            records[3].gold_exact,
            GoldExact::Groups(vec![vec!["x".into()], vec!["y".into()]])
        );
    }

    #[test]
    fn read_golden_rejects_bad_yesno_label() {
        let json = r#"{"questions":[{"id":"y","type":"yesno","body":"?","exact_answer":"maybe"}]}"#;
        let err = read_golden(json.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("maybe"));
    }

    #[test]
    fn read_golden_accepts_ideal_answer_array_and_gold_urls() {
        let json = r#"{"questions":[{
            "id":"q","type":"summary","body":"?",
            "ideal_answer":["first","second"],
            "documents":["http://www.ncbi.nlm.nih.gov/pubmed/111","111","222"]
        }]}"#;
        let records = read_golden(json.as_bytes()).unwrap();
        assert_eq!(records[0].gold_ideal, vec!["first", "second"]);
        // Duplicate references collapse; order is preserved.
        assert_eq!(records[0].gold_documents, vec!["111", "222"]);
    }

    #[test]
    fn read_golden_rejects_inverted_snippet_offsets() {
        let json = r#"{"questions":[{
            "id":"q","type":"summary","body":"?",
            "snippets":[{"document":"1","text":"t","beginSection":"abstract",
                "endSection":"abstract","offsetInBeginSection":5,"offsetInEndSection":2}]
        }]}"#;
        let err = read_golden(json.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("inverted"));
    }

    #[test]
    fn missing_questions_array_is_an_error() {
        let err = read_questions(r#"{"items":[]}"#.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("questions"));
    }
}
