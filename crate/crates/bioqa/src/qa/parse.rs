//! Response parsing: extracting ideal/exact answers from LLM completions and
//! detecting the malformations that trigger resampling.

use std::fmt;

use crate::model::YesNo;

/// A way a completion can violate the expected answer format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    /// No `Exact answer:` line where the question type requires one.
    MissingExact,
    /// The exact answer of a yes/no question is neither yes nor no.
    NotYesNo,
    /// Entities separated by commas or newlines instead of semicolons.
    BadSeparator,
    /// The ideal answer is empty.
    EmptyIdeal,
}

impl Defect {
    pub fn code(self) -> &'static str {
        match self {
            Defect::MissingExact => "missing_exact",
            Defect::NotYesNo => "not_yes_no",
            Defect::BadSeparator => "bad_separator",
            Defect::EmptyIdeal => "empty_ideal",
        }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A completion split into its answer parts, with format defects recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    /// Text before the `Exact answer:` marker (the whole completion when the
    /// marker is absent), trimmed.
    pub ideal: String,
    /// The rest of the marker's line, trimmed; `None` when the marker is
    /// absent.
    pub exact_raw: Option<String>,
    pub defects: Vec<Defect>,
}

impl ParsedResponse {
    pub fn wellformed(&self) -> bool {
        self.defects.is_empty()
    }
}

use crate::model::QuestionType;

const MARKER: &str = "exact answer:";

/// Finds the `Exact answer:` marker case-insensitively; returns the byte range
/// (start of marker, end of marker).
fn find_marker(text: &str) -> Option<(usize, usize)> {
    let bytes = text.as_bytes();
    let marker = MARKER.as_bytes();
    if bytes.len() < marker.len() {
        return None;
    }
    (0..=bytes.len() - marker.len())
        .filter(|&i| text.is_char_boundary(i))
        .find(|&i| bytes[i..i + marker.len()].eq_ignore_ascii_case(marker))
        .map(|i| (i, i + marker.len()))
}

/// Splits a completion into ideal and exact parts and records every format
/// defect relevant to the question type. Summary questions only need a
/// nonempty ideal answer; the other types also need a usable exact answer.
pub fn parse_response(qtype: QuestionType, completion: &str) -> ParsedResponse {
    let mut defects = Vec::new();
    let needs_exact = qtype != QuestionType::Summary;
    let (ideal, exact_raw, after_line) = match find_marker(completion) {
        Some((start, end)) => {
            let rest = &completion[end..];
            let line_end = rest.find('\n').unwrap_or(rest.len());
            (
                completion[..start].trim().to_string(),
                Some(rest[..line_end].trim().to_string()),
                rest[line_end..].trim().to_string(),
            )
        }
        None => (completion.trim().to_string(), None, String::new()),
    };
    if needs_exact && exact_raw.is_none() {
        defects.push(Defect::MissingExact);
    }
    if let Some(raw) = &exact_raw {
        match qtype {
            QuestionType::YesNo => {
                if normalize_yesno(raw).is_none() {
                    defects.push(Defect::NotYesNo);
                }
            }
            QuestionType::Factoid | QuestionType::List => {
                let comma_separated = raw.contains(',') && !raw.contains(';');
                // An empty exact line followed by more text means the model
                // put the entities on the following lines.
                let newline_separated = raw.is_empty() && !after_line.is_empty();
                if comma_separated || newline_separated {
                    defects.push(Defect::BadSeparator);
                }
            }
            QuestionType::Summary => {}
        }
    }
    if ideal.is_empty() {
        defects.push(Defect::EmptyIdeal);
    }
    ParsedResponse {
        ideal,
        exact_raw,
        defects,
    }
}

/// Normalizes a raw yes/no exact answer: the first whitespace word, stripped
/// of surrounding punctuation, lowercased. Anything other than yes/no is
/// `None`.
pub fn normalize_yesno(raw: &str) -> Option<YesNo> {
    let first = raw.split_whitespace().next()?;
    let cleaned = first
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    match cleaned.as_str() {
        "yes" => Some(YesNo::Yes),
        "no" => Some(YesNo::No),
        _ => None,
    }
}

/// Splits a semicolon-separated exact answer into entities: trimmed, empties
/// dropped, case-insensitive duplicates collapsed to the first occurrence.
pub fn extract_entities(exact_raw: &str) -> Vec<String> {
    let mut entities: Vec<String> = Vec::new();
    for part in exact_raw.split(';') {
        let entity = part.trim();
        if entity.is_empty() {
            continue;
        }
        if !entities.iter().any(|e| e.eq_ignore_ascii_case(entity)) {
            entities.push(entity.to_string());
        }
    }
    entities
}

/// Majority vote over yes/no answers; ties resolve to yes. (An empty slice
/// also yields yes — callers treat that as the degraded default.)
pub fn majority_vote(votes: &[YesNo]) -> YesNo {
    let yes = votes.iter().filter(|v| **v == YesNo::Yes).count();
    let no = votes.len() - yes;
    if yes >= no {
        YesNo::Yes
    } else {
        YesNo::No
    }
}

/// Parses a synonym-grouping completion. The completion continues the
/// prompt's final `[GROUP1]:` line, so the first line holds group one;
/// `[GROUPn]:` headers start further groups and other lines extend the
/// current group. Members are semicolon-separated. Empty groups are dropped.
pub fn parse_groups(completion: &str) -> Vec<Vec<String>> {
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for line in completion.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let content = match group_header(trimmed) {
            Some(content) => {
                if !current.is_empty() {
                    groups.push(std::mem::take(&mut current));
                }
                content
            }
            None => trimmed,
        };
        for member in content.split(';') {
            let member = member.trim();
            if !member.is_empty() {
                current.push(member.to_string());
            }
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    groups
}

/// Recognizes a `[GROUPn]:` line (the model sometimes repeats the header the
/// prompt already opened); returns the content after the colon.
fn group_header(line: &str) -> Option<&str> {
    let after_bracket = line.strip_prefix('[')?;
    let bytes = after_bracket.as_bytes();
    if bytes.len() < 5 || !bytes[..5].eq_ignore_ascii_case(b"group") {
        return None;
    }
    let close = after_bracket.find("]:")?;
    Some(after_bracket[close + 2..].trim_start())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ideal_then_exact() {
        let completion = "Yes, papilin is secreted in many organisms.\nExact answer: yes\n";
        let parsed = parse_response(QuestionType::YesNo, completion);
        assert_eq!(parsed.ideal, "Yes, papilin is secreted in many organisms.");
        assert_eq!(parsed.exact_raw.as_deref(), Some("yes"));
        assert!(parsed.wellformed());
    }

    #[test]
    fn marker_is_case_insensitive_and_mid_line() {
        let completion = "The answer is clear. exact ANSWER: No";
        let parsed = parse_response(QuestionType::YesNo, completion);
        assert_eq!(parsed.exact_raw.as_deref(), Some("No"));
        assert_eq!(parsed.ideal, "The answer is clear.");
        assert!(parsed.wellformed());
    }

    #[test]
    fn missing_marker_is_a_defect_except_for_summary() {
        let completion = "Just prose with no marker.";
        for qtype in [QuestionType::YesNo, QuestionType::Factoid, QuestionType::List] {
            let parsed = parse_response(qtype, completion);
            assert!(parsed.defects.contains(&Defect::MissingExact));
        }
        let summary = parse_response(QuestionType::Summary, completion);
        assert!(summary.wellformed());
        assert_eq!(summary.ideal, "Just prose with no marker.");
    }

    #[test]
    fn non_yesno_exact_is_flagged() {
        let parsed = parse_response(QuestionType::YesNo, "Ideal.\nExact answer: maybe");
        assert_eq!(parsed.defects, vec![Defect::NotYesNo]);
    }

    #[test]
    fn comma_separated_entities_are_flagged() {
        let parsed = parse_response(QuestionType::List, "Ideal.\nExact answer: a, b, c");
        assert_eq!(parsed.defects, vec![Defect::BadSeparator]);
        // Semicolons (with incidental commas inside an entity) are fine.
        let ok = parse_response(QuestionType::List, "Ideal.\nExact answer: a, the first; b");
        assert!(ok.wellformed());
    }

    #[test]
    fn newline_separated_entities_are_flagged() {
        let parsed = parse_response(
            QuestionType::List,
            "Ideal.\nExact answer:\nentity one\nentity two",
        );
        assert!(parsed.defects.contains(&Defect::BadSeparator));
    }

    #[test]
    fn empty_ideal_is_flagged() {
        let parsed = parse_response(QuestionType::YesNo, "Exact answer: yes");
        assert!(parsed.defects.contains(&Defect::EmptyIdeal));
        assert_eq!(parsed.ideal, "");
        let summary = parse_response(QuestionType::Summary, "   \n ");
        assert!(summary.defects.contains(&Defect::EmptyIdeal));
    }

    #[test]
    fn normalize_accepts_punctuation_and_case() {
        assert_eq!(normalize_yesno("yes"), Some(YesNo::Yes));
        assert_eq!(normalize_yesno("Yes."), Some(YesNo::Yes));
        assert_eq!(normalize_yesno("YES, because"), Some(YesNo::Yes));
        assert_eq!(normalize_yesno("\"No\""), Some(YesNo::No));
        assert_eq!(normalize_yesno("no-"), Some(YesNo::No));
        assert_eq!(normalize_yesno("Nope"), None);
        assert_eq!(normalize_yesno(""), None);
        assert_eq!(normalize_yesno("definitely yes"), None);
    }

    #[test]
    fn entities_split_trim_dedup() {
        assert_eq!(
            extract_entities(" FGFR3; FGFR2 ;; fgfr3; NELL1 "),
            vec!["FGFR3", "FGFR2", "NELL1"]
        );
        assert_eq!(extract_entities(";;;"), Vec::<String>::new());
        assert_eq!(extract_entities(""), Vec::<String>::new());
    }

    #[test]
    fn majority_vote_counts_and_breaks_ties_yes() {
        use YesNo::*;
        assert_eq!(majority_vote(&[Yes, No, Yes]), Yes);
        assert_eq!(majority_vote(&[No, No, Yes]), No);
        assert_eq!(majority_vote(&[Yes, No]), Yes);
        assert_eq!(majority_vote(&[No]), No);
        assert_eq!(majority_vote(&[]), Yes);
    }

    #[test]
    fn parse_groups_handles_continuation_and_headers() {
        let completion = "fibromyalgia; chronic fatigue syndrome\n\
            [GROUP2]: autosomal dominant polycystic kidney disease; Marfan syndrome\n\
            [GROUP3]: Cutis laxa syndromes\n\
            [GROUP4]: depression; hypermobility spectrum disorders";
        let groups = parse_groups(completion);
        assert_eq!(groups.len(), 4);
        assert_eq!(groups[0], vec!["fibromyalgia", "chronic fatigue syndrome"]);
        assert_eq!(groups[2], vec!["Cutis laxa syndromes"]);
        assert_eq!(
            groups[3],
            vec!["depression", "hypermobility spectrum disorders"]
        );
    }

    #[test]
    fn parse_groups_tolerates_repeated_first_header() {
        let completion = "[GROUP1]: a; b\n[GROUP2]: c";
        let groups = parse_groups(completion);
        assert_eq!(groups, vec![vec!["a", "b"], vec!["c"]]);
    }

    #[test]
    fn parse_groups_continuation_lines_extend_current_group() {
        let completion = "a; b\nc; d\n[GROUP2]: e";
        let groups = parse_groups(completion);
        assert_eq!(groups, vec![vec!["a", "b", "c", "d"], vec!["e"]]);
    }

    #[test]
    fn parse_groups_empty_input_yields_nothing() {
        assert!(parse_groups("").is_empty());
        assert!(parse_groups("  \n \n").is_empty());
        assert!(parse_groups("[GROUP1]:\n[GROUP2]:").is_empty());
    }
}
