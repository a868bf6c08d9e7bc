use std::fmt;

use thiserror::Error;

use crate::util;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("entry {index}: {reason}")]
    Entry { index: usize, reason: String },
    #[error("validation: {0}")]
    Validation(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// The four question categories handled by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuestionType {
    YesNo,
    Factoid,
    List,
    Summary,
}

impl QuestionType {
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::YesNo => "yesno",
            QuestionType::Factoid => "factoid",
            QuestionType::List => "list",
            QuestionType::Summary => "summary",
        }
    }

    /// Parses the exact lowercase type labels used in the interchange format.
    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "yesno" => Some(QuestionType::YesNo),
            "factoid" => Some(QuestionType::Factoid),
            "list" => Some(QuestionType::List),
            "summary" => Some(QuestionType::Summary),
            _ => None,
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A binary answer label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum YesNo {
    Yes,
    No,
}

impl YesNo {
    pub fn as_str(self) -> &'static str {
        match self {
            YesNo::Yes => "yes",
            YesNo::No => "no",
        }
    }
}

impl fmt::Display for YesNo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One benchmark question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub qtype: QuestionType,
    pub body: String,
}

impl Question {
    pub fn new(
        id: impl Into<String>,
        qtype: QuestionType,
        body: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        let body = body.into();
        if id.trim().is_empty() {
            return Err(ModelError::Validation("question id is empty".into()));
        }
        if body.trim().is_empty() {
            return Err(ModelError::Validation(format!(
                "question {id} has an empty body"
            )));
        }
        Ok(Question { id, qtype, body })
    }
}

/// A PubMed article: identifier, title, and abstract text. The score is
/// populated by the reranker.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub pmid: String,
    pub title: String,
    pub abstract_text: String,
    pub score: Option<f64>,
}

impl Document {
    pub fn new(
        pmid: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let pmid = pmid.into();
        if pmid.is_empty() || !pmid.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ModelError::Validation(format!(
                "pmid {pmid:?} is not a digit string"
            )));
        }
        Ok(Document {
            pmid,
            title: title.into(),
            abstract_text: abstract_text.into(),
            score: None,
        })
    }

    /// The section text a snippet offset refers to.
    pub fn section_text(&self, section: Section) -> &str {
        match section {
            Section::Title => &self.title,
            Section::Abstract => &self.abstract_text,
        }
    }
}

/// The article section a snippet was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Section {
    Title,
    Abstract,
}

impl Section {
    pub fn as_str(self) -> &'static str {
        match self {
            Section::Title => "title",
            Section::Abstract => "abstract",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "title" => Some(Section::Title),
            "abstract" => Some(Section::Abstract),
            _ => None,
        }
    }
}

/// A contiguous passage of a document section. Offsets count Unicode scalar
/// values within the section text: `text` equals the scalars in
/// `[offset_begin, offset_end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snippet {
    pub pmid: String,
    pub text: String,
    pub begin_section: Section,
    pub end_section: Section,
    pub offset_begin: usize,
    pub offset_end: usize,
    pub score: Option<f64>,
}

impl Snippet {
    /// Checks that the stored text reproduces the offset range of
    /// `section_text` exactly.
    pub fn verify_against(&self, section_text: &str) -> bool {
        util::char_substring(section_text, self.offset_begin, self.offset_end)
            .is_some_and(|slice| slice == self.text)
    }
}

/// The exact-answer part of an answer, shaped by question type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExactAnswer {
    /// Yes/no questions.
    YesNo(YesNo),
    /// Factoid (up to five ranked entities) and list questions.
    Entities(Vec<String>),
    /// Summary questions carry no exact answer.
    None,
}

/// A complete answer: free-text ideal answer plus a typed exact answer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerSet {
    pub ideal: String,
    pub exact: ExactAnswer,
}

impl AnswerSet {
    /// Validating constructor for well-formed answers. Degraded pipeline paths
    /// build the struct directly and record a warning instead.
    pub fn checked(
        qtype: QuestionType,
        ideal: impl Into<String>,
        exact: ExactAnswer,
    ) -> Result<Self, ModelError> {
        let answer = AnswerSet {
            ideal: ideal.into(),
            exact,
        };
        answer.validate(qtype)?;
        Ok(answer)
    }

    pub fn validate(&self, qtype: QuestionType) -> Result<(), ModelError> {
        if self.ideal.trim().is_empty() {
            return Err(ModelError::Validation("ideal answer is empty".into()));
        }
        match (qtype, &self.exact) {
            (QuestionType::YesNo, ExactAnswer::YesNo(_)) => Ok(()),
            (QuestionType::Summary, ExactAnswer::None) => Ok(()),
            (QuestionType::Factoid, ExactAnswer::Entities(entities)) => {
                if entities.is_empty() || entities.len() > 5 {
                    return Err(ModelError::Validation(format!(
                        "factoid answers carry 1..=5 entities, got {}",
                        entities.len()
                    )));
                }
                Self::validate_entities(entities)
            }
            (QuestionType::List, ExactAnswer::Entities(entities)) => {
                if entities.is_empty() {
                    return Err(ModelError::Validation(
                        "list answers carry at least one entity".into(),
                    ));
                }
                Self::validate_entities(entities)
            }
            (qtype, exact) => Err(ModelError::Validation(format!(
                "exact answer shape {exact:?} does not fit question type {qtype}"
            ))),
        }
    }

    fn validate_entities(entities: &[String]) -> Result<(), ModelError> {
        for entity in entities {
            if entity.trim().is_empty() {
                return Err(ModelError::Validation("empty entity in exact answer".into()));
            }
        }
        for (i, a) in entities.iter().enumerate() {
            for b in entities.iter().skip(i + 1) {
                if a.eq_ignore_ascii_case(b) {
                    return Err(ModelError::Validation(format!(
                        "duplicate entity {a:?} in exact answer"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Exact answer of a golden record, interpreted against the question type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoldExact {
    YesNo(YesNo),
    /// Synonym groups: for list questions each group is one expected item with
    /// its accepted synonyms; for factoid questions the union of all groups is
    /// the accepted synonym set.
    Groups(Vec<Vec<String>>),
    None,
}

/// A fully annotated question as read from a golden file (or from a previous
/// pipeline stage's output, which uses the same format).
#[derive(Debug, Clone)]
pub struct GoldenRecord {
    pub question: Question,
    /// Referenced pmids, deduplicated, in file order.
    pub gold_documents: Vec<String>,
    pub gold_snippets: Vec<Snippet>,
    pub gold_ideal: Vec<String>,
    pub gold_exact: GoldExact,
}

/// Exact answer as it appears in a prediction file, before the question type
/// is known. [`crate::eval`] interprets it against the golden annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawExact {
    Absent,
    Text(String),
    Flat(Vec<String>),
    Nested(Vec<Vec<String>>),
}

/// One system response as read from a prediction file.
#[derive(Debug, Clone)]
pub struct PredictionRecord {
    pub id: String,
    /// Predicted pmids in rank order.
    pub documents: Vec<String>,
    pub snippets: Vec<Snippet>,
    pub ideal: Option<String>,
    pub exact: RawExact,
}

/// One pipeline result ready to be written: the question, its ranked evidence,
/// and (after the answer phase) the generated answer.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub question: Question,
    pub documents: Vec<Document>,
    pub snippets: Vec<Snippet>,
    pub answer: Option<AnswerSet>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn question_type_round_trips() {
        for qtype in [
            QuestionType::YesNo,
            QuestionType::Factoid,
            QuestionType::List,
            QuestionType::Summary,
        ] {
            assert_eq!(QuestionType::parse(qtype.as_str()), Some(qtype));
        }
        assert_eq!(QuestionType::parse("ranking"), None);
        assert_eq!(QuestionType::parse("YesNo"), None);
    }

    #[test]
    fn question_requires_nonempty_body() {
        assert!(Question::new("q1", QuestionType::List, "  ").is_err());
        assert!(Question::new("", QuestionType::List, "body").is_err());
        assert!(Question::new("q1", QuestionType::List, "body").is_ok());
    }

    #[test]
    fn document_requires_digit_pmid() {
        assert!(Document::new("123", "t", "a").is_ok());
        assert!(Document::new("12a", "t", "a").is_err());
        assert!(Document::new("", "t", "a").is_err());
    }

    #[test]
    fn snippet_verifies_char_offsets() {
        let snippet = Snippet {
            pmid: "1".into(),
            text: "βc".into(),
            begin_section: Section::Abstract,
            end_section: Section::Abstract,
            offset_begin: 1,
            offset_end: 3,
            score: None,
        };
        assert!(snippet.verify_against("aβcδ"));
        assert!(!snippet.verify_against("abcd"));
    }

    #[test]
    fn answer_set_shape_must_match_type() {
        let yes = AnswerSet::checked(
            QuestionType::YesNo,
            "Yes, it is.",
            ExactAnswer::YesNo(YesNo::Yes),
        );
        assert!(yes.is_ok());
        let wrong_shape = AnswerSet::checked(
            QuestionType::YesNo,
            "Yes.",
            ExactAnswer::Entities(vec!["yes".into()]),
        );
        assert!(wrong_shape.is_err());
        let summary = AnswerSet::checked(QuestionType::Summary, "Overview.", ExactAnswer::None);
        assert!(summary.is_ok());
    }

    #[test]
    fn factoid_entities_capped_at_five() {
        let six: Vec<String> = (0..6).map(|i| format!("e{i}")).collect();
        assert!(AnswerSet::checked(
            QuestionType::Factoid,
            "ideal",
            ExactAnswer::Entities(six)
        )
        .is_err());
        let five: Vec<String> = (0..5).map(|i| format!("e{i}")).collect();
        assert!(AnswerSet::checked(
            QuestionType::Factoid,
            "ideal",
            ExactAnswer::Entities(five)
        )
        .is_ok());
    }

    #[test]
    fn duplicate_entities_rejected_case_insensitively() {
        let dup = AnswerSet::checked(
            QuestionType::List,
            "ideal",
            ExactAnswer::Entities(vec!["BRCA1".into(), "brca1".into()]),
        );
        assert!(dup.is_err());
    }

    #[test]
    fn empty_ideal_rejected() {
        let result = AnswerSet::checked(QuestionType::Summary, "   ", ExactAnswer::None);
        assert!(result.is_err());
    }
}
