//! Prompt templates and rendering.
//!
//! Templates are plain text with `{name}` placeholders, embedded at compile
//! time and overridable from a directory. Rendering is a single left-to-right
//! pass: substituted values are never rescanned, so question bodies or
//! snippets containing `{...}` or the stop sequence pass through verbatim.
//! Every template ends with its terminal cue (`Ideal answer:`, `Answer`, or
//! `[GROUP1]:`) and prompt construction re-checks that after rendering, since
//! the completion quality depends on the prompt ending exactly there.

use std::path::Path;

use crate::model::QuestionType;

use super::QaError;

/// Replaces `{name}` placeholders with values from `vars` in one pass.
/// Unknown placeholders and stray braces are kept as-is.
pub fn render_template(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after_open = &rest[open..];
        match after_open.find('}') {
            Some(close) => {
                let name = &after_open[1..close];
                match vars.iter().find(|(key, _)| *key == name) {
                    Some((_, value)) => {
                        out.push_str(value);
                        rest = &after_open[close + 1..];
                    }
                    None => {
                        out.push('{');
                        rest = &after_open[1..];
                    }
                }
            }
            None => {
                out.push_str(after_open);
                return out;
            }
        }
    }
    out.push_str(rest);
    out
}

/// The five QA prompt templates.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    pub yesno: String,
    pub factoid: String,
    pub list: String,
    pub summary: String,
    pub grouping: String,
}

impl PromptLibrary {
    pub fn embedded() -> Self {
        PromptLibrary {
            yesno: include_str!("../../templates/yesno.txt").to_string(),
            factoid: include_str!("../../templates/factoid.txt").to_string(),
            list: include_str!("../../templates/list.txt").to_string(),
            summary: include_str!("../../templates/summary.txt").to_string(),
            grouping: include_str!("../../templates/grouping.txt").to_string(),
        }
    }

    /// Loads template files (`yesno.txt`, `factoid.txt`, `list.txt`,
    /// `summary.txt`, `grouping.txt`) from a directory; files that are absent
    /// keep the embedded default.
    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let mut library = Self::embedded();
        for (name, slot) in [
            ("yesno.txt", &mut library.yesno),
            ("factoid.txt", &mut library.factoid),
            ("list.txt", &mut library.list),
            ("summary.txt", &mut library.summary),
            ("grouping.txt", &mut library.grouping),
        ] {
            if let Ok(text) = std::fs::read_to_string(dir.join(name)) {
                *slot = text;
            }
        }
        library
    }

    pub fn template_for(&self, qtype: QuestionType) -> &str {
        match qtype {
            QuestionType::YesNo => &self.yesno,
            QuestionType::Factoid => &self.factoid,
            QuestionType::List => &self.list,
            QuestionType::Summary => &self.summary,
        }
    }
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::embedded()
    }
}

/// The string a rendered prompt must end with so the completion starts in the
/// right place. The summary cue is `Answer` without a colon; the others end
/// with `Ideal answer:`.
pub fn terminal_marker(qtype: QuestionType) -> &'static str {
    match qtype {
        QuestionType::Summary => "Answer",
        _ => "Ideal answer:",
    }
}

/// Renders the QA prompt for a question, substituting the context and the
/// question body.
pub fn build_prompt(
    library: &PromptLibrary,
    qtype: QuestionType,
    context: &str,
    question_body: &str,
) -> Result<String, QaError> {
    let rendered = render_template(
        library.template_for(qtype),
        &[
            ("context", context),
            ("question_body", question_body),
            ("question body", question_body),
            ("body", question_body),
        ],
    );
    let marker = terminal_marker(qtype);
    if !rendered.ends_with(marker) {
        return Err(QaError::Template(format!(
            "{qtype} prompt does not end with {marker:?}"
        )));
    }
    Ok(rendered)
}

/// Renders the synonym-grouping prompt around a `; `-joined entity list.
pub fn build_grouping_prompt(library: &PromptLibrary, entity_list: &str) -> Result<String, QaError> {
    let rendered = render_template(&library.grouping, &[("entity_list", entity_list)]);
    if !rendered.ends_with("[GROUP1]:") {
        return Err(QaError::Template(
            "grouping prompt does not end with \"[GROUP1]:\"".into(),
        ));
    }
    Ok(rendered)
}
