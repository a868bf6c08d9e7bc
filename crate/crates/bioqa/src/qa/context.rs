//! Context formation: what part of the evidence goes into a prompt.

use crate::model::Snippet;
use crate::util::word_prefix;

/// How a prompt context is assembled from the ranked snippet list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextPolicy {
    /// Join the texts of the first `snippet_count` snippets with `"; "` and
    /// keep at most `word_limit` words. The result is a literal prefix of the
    /// joined text.
    PrefixWords {
        word_limit: usize,
        snippet_count: usize,
    },
    /// The text of snippet `i` alone; an index past the end falls back to the
    /// last available snippet.
    PerSnippet(usize),
}

impl Default for ContextPolicy {
    fn default() -> Self {
        ContextPolicy::PrefixWords {
            word_limit: 1000,
            snippet_count: 10,
        }
    }
}

/// Builds the prompt context for `snippets` under `policy`. No snippets yield
/// an empty context.
pub fn form_context(snippets: &[Snippet], policy: &ContextPolicy) -> String {
    match policy {
        ContextPolicy::PrefixWords {
            word_limit,
            snippet_count,
        } => {
            let joined = snippets
                .iter()
                .take(*snippet_count)
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join("; ");
            word_prefix(&joined, *word_limit).to_string()
        }
        ContextPolicy::PerSnippet(index) => snippets
            .get(*index)
            .or_else(|| snippets.last())
            .map(|s| s.text.clone())
            .unwrap_or_default(),
    }
}
