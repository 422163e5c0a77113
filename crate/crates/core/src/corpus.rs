//! Requirements document ingestion.
//!
//! An SRS is plain UTF-8 text. Lines beginning with `## ` open a section;
//! `## Use Case: <title>` sections become use cases (an optional trailing
//! `[UC-x]` overrides the generated id) and a `## Actors` section lists one
//! actor per bullet. Everything else is preamble.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("MissingUseCases: no `## Use Case:` sections found")]
    MissingUseCases,
    #[error("DuplicateUseCaseId: use case id {0} appears more than once")]
    DuplicateUseCaseId(String),
    #[error("EmptyUseCase: use case {0} has no body text")]
    EmptyUseCase(String),
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::MissingUseCases => "MissingUseCases",
            CorpusError::DuplicateUseCaseId(_) => "DuplicateUseCaseId",
            CorpusError::EmptyUseCase(_) => "EmptyUseCase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseCase {
    pub uc_id: String,
    pub title: String,
    /// Taken from an `Actor:` line in the body; empty when absent.
    pub actor: String,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum RegionKind {
    Preamble,
    Actors,
    UseCase(usize),
}

/// Byte span of `raw_text` owned by one region. Regions tile the text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub start: usize,
    pub end: usize,
}

impl Region {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrsDocument {
    pub project_id: String,
    pub title: String,
    pub raw_text: String,
    pub actor_types: Vec<String>,
    pub use_cases: Vec<UseCase>,
    pub word_count: usize,
    pub regions: Vec<Region>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub actor_count: usize,
    pub use_case_count: usize,
    pub word_count: usize,
}

enum SectionKind {
    Other,
    Actors,
    UseCase {
        title: String,
        explicit_id: Option<String>,
    },
}

fn classify_heading(line: &str) -> Option<SectionKind> {
    let rest = line.strip_prefix("## ")?;
    let trimmed = rest.trim();
    if let Some(after) = strip_prefix_ignore_case(trimmed, "use case:") {
        let (title, explicit_id) = split_explicit_id(after.trim());
        return Some(SectionKind::UseCase { title, explicit_id });
    }
    if let Some(after) = strip_prefix_ignore_case(trimmed, "actors") {
        if after.is_empty() || after.starts_with([' ', ':']) {
            return Some(SectionKind::Actors);
        }
    }
    Some(SectionKind::Other)
}

fn strip_prefix_ignore_case<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    let head = text.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix)
        .then(|| &text[prefix.len()..])
}

fn split_explicit_id(title: &str) -> (String, Option<String>) {
    if let Some(stripped) = title.strip_suffix(']') {
        if let Some(open) = stripped.rfind('[') {
            let id = stripped[open + 1..].trim();
            if !id.is_empty() && !id.contains(char::is_whitespace) {
                return (
                    stripped[..open].trim_end().to_string(),
                    Some(id.to_string()),
                );
            }
        }
    }
    (title.to_string(), None)
}

fn line_spans(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    text.split_inclusive('\n').map(move |line| {
        let start = offset;
        offset += line.len();
        (start, line)
    })
}

/// Counts whitespace-delimited tokens.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

fn find_actor(body: &str) -> String {
    body.lines()
        .map(str::trim)
        .find_map(|line| {
            ["actor:", "actors:", "primary actor:"]
                .iter()
                .find_map(|p| strip_prefix_ignore_case(line, p))
                .map(|rest| rest.trim().to_string())
        })
        .unwrap_or_default()
}

fn parse_actor_bullets(section: &str) -> Vec<String> {
    section
        .lines()
        .skip(1)
        .filter_map(|line| {
            let t = line.trim_start();
            t.strip_prefix("- ")
                .or_else(|| t.strip_prefix("* "))
                .or_else(|| t.strip_prefix("+ "))
                .map(|a| a.trim().to_string())
        })
        .filter(|a| !a.is_empty())
        .collect()
}

/// Parses SRS text into a document with ordered use cases.
pub fn parse_srs(text: &str, project_id: &str) -> Result<SrsDocument, CorpusError> {
    struct Section {
        kind: SectionKind,
        start: usize,
        end: usize,
    }

    let mut sections: Vec<Section> = Vec::new();
    let mut preamble_end = text.len();
    for (start, line) in line_spans(text) {
        let bare = line.trim_end_matches(['\n', '\r']);
        if let Some(kind) = classify_heading(bare) {
            if sections.is_empty() {
                preamble_end = start;
            }
            if let Some(last) = sections.last_mut() {
                last.end = start;
            }
            sections.push(Section {
                kind,
                start,
                end: text.len(),
            });
        }
    }

    let title = text
        .lines()
        .take_while(|l| !l.starts_with("## "))
        .find_map(|l| l.strip_prefix("# ").map(|t| t.trim().to_string()))
        .filter(|t| !t.is_empty())
        .unwrap_or_else(|| project_id.to_string());

    let mut regions = Vec::new();
    if preamble_end > 0 {
        regions.push(Region {
            kind: RegionKind::Preamble,
            start: 0,
            end: preamble_end,
        });
    }
    let mut actor_types = Vec::new();
    let mut use_cases = Vec::new();
    let mut seen = HashSet::new();

    for section in &sections {
        let chunk = &text[section.start..section.end];
        let kind = match &section.kind {
            SectionKind::Other => RegionKind::Preamble,
            SectionKind::Actors => {
                actor_types.extend(parse_actor_bullets(chunk));
                RegionKind::Actors
            }
            SectionKind::UseCase { title, explicit_id } => {
                let ordinal = use_cases.len() + 1;
                let uc_id = explicit_id
                    .clone()
                    .unwrap_or_else(|| format!("UC-{ordinal}"));
                if !seen.insert(uc_id.clone()) {
                    return Err(CorpusError::DuplicateUseCaseId(uc_id));
                }
                let body = chunk
                    .split_once('\n')
                    .map(|(_, b)| b)
                    .unwrap_or("")
                    .trim()
                    .to_string();
                if body.is_empty() {
                    return Err(CorpusError::EmptyUseCase(uc_id));
                }
                use_cases.push(UseCase {
                    actor: find_actor(&body),
                    uc_id,
                    title: title.clone(),
                    body,
                });
                RegionKind::UseCase(use_cases.len() - 1)
            }
        };
        // adjacent preamble-kind regions merge
        match regions.last_mut() {
            Some(prev) if prev.kind == RegionKind::Preamble && kind == RegionKind::Preamble => {
                prev.end = section.end;
            }
            _ => regions.push(Region {
                kind,
                start: section.start,
                end: section.end,
            }),
        }
    }

    if use_cases.is_empty() {
        return Err(CorpusError::MissingUseCases);
    }

    Ok(SrsDocument {
        project_id: project_id.to_string(),
        title,
        raw_text: text.to_string(),
        actor_types,
        use_cases,
        word_count: count_words(text),
        regions,
    })
}

pub fn srs_stats(doc: &SrsDocument) -> StatsRecord {
    StatsRecord {
        actor_count: doc.actor_types.len(),
        use_case_count: doc.use_cases.len(),
        word_count: doc.word_count,
    }
}

impl SrsDocument {
    pub fn stats(&self) -> StatsRecord {
        srs_stats(self)
    }

    pub fn use_case(&self, uc_id: &str) -> Option<&UseCase> {
        self.use_cases.iter().find(|uc| uc.uc_id == uc_id)
    }

    pub fn region_text(&self, region: &Region) -> &str {
        &self.raw_text[region.range()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "# Demo Portal\n\nIntro text.\n\n## Use Case: Login\nActor: Student\nThe student logs in.\n\n## use case: Logout\nThe student logs out.\n";

    #[test]
    fn two_use_cases_get_sequential_ids() {
        let doc = parse_srs(TWO, "demo").unwrap();
        assert_eq!(doc.title, "Demo Portal");
        let ids: Vec<_> = doc.use_cases.iter().map(|u| u.uc_id.as_str()).collect();
        assert_eq!(ids, ["UC-1", "UC-2"]);
        assert_eq!(doc.use_cases[0].actor, "Student");
        assert_eq!(doc.use_cases[1].actor, "");
        assert_eq!(doc.use_cases[1].body, "The student logs out.");
    }

    #[test]
    fn empty_input_has_no_use_cases() {
        assert_eq!(parse_srs("", "x"), Err(CorpusError::MissingUseCases));
        assert_eq!(
            parse_srs("# Title\n\n## Scope\nstuff\n", "x"),
            Err(CorpusError::MissingUseCases)
        );
    }

    #[test]
    fn explicit_ids_override_and_duplicates_fail() {
        let text = "## Use Case: Apply [UC-7]\nbody a\n## Use Case: Approve\nbody b\n";
        let doc = parse_srs(text, "p").unwrap();
        assert_eq!(doc.use_cases[0].uc_id, "UC-7");
        assert_eq!(doc.use_cases[0].title, "Apply");
        assert_eq!(doc.use_cases[1].uc_id, "UC-2");

        let dup = "## Use Case: A [UC-2]\nx\n## Use Case: B\ny\n";
        assert_eq!(
            parse_srs(dup, "p"),
            Err(CorpusError::DuplicateUseCaseId("UC-2".into()))
        );
    }

    #[test]
    fn empty_use_case_body_is_rejected() {
        let text = "## Use Case: A\n\n## Use Case: B\ny\n";
        assert_eq!(
            parse_srs(text, "p"),
            Err(CorpusError::EmptyUseCase("UC-1".into()))
        );
    }

    #[test]
    fn actor_block_is_collected() {
        let text = "# P\n## Actors\n- Admin\n- Mentor\n* Mentee\n\n## Use Case: Sign up\nbody\n";
        let doc = parse_srs(text, "p").unwrap();
        assert_eq!(doc.actor_types, ["Admin", "Mentor", "Mentee"]);
        assert_eq!(
            doc.stats(),
            StatsRecord {
                actor_count: 3,
                use_case_count: 1,
                word_count: count_words(text)
            }
        );
    }

    #[test]
    fn single_use_case_without_actor_block() {
        let text = "## Use Case: Only\none two three\n";
        let doc = parse_srs(text, "p").unwrap();
        assert_eq!(
            srs_stats(&doc),
            StatsRecord {
                actor_count: 0,
                use_case_count: 1,
                word_count: 7
            }
        );
        assert_eq!(doc.title, "p");
    }

    #[test]
    fn regions_tile_raw_text() {
        let text = "# T\npre\n## Notes\nnote\n## Actors\n- A\n## Use Case: X\nx body\n## Glossary\ng\n## Use Case: Y\ny body";
        let doc = parse_srs(text, "p").unwrap();
        let mut pos = 0;
        for r in &doc.regions {
            assert_eq!(r.start, pos);
            pos = r.end;
        }
        assert_eq!(pos, text.len());
        let kinds: Vec<_> = doc.regions.iter().map(|r| r.kind).collect();
        assert_eq!(
            kinds,
            [
                RegionKind::Preamble,
                RegionKind::Actors,
                RegionKind::UseCase(0),
                RegionKind::Preamble,
                RegionKind::UseCase(1)
            ]
        );
        assert!(doc.region_text(&doc.regions[2]).contains("x body"));
    }

    #[test]
    fn crlf_input_is_handled() {
        let text = "## Use Case: A\r\nline one\r\n## Use Case: B\r\nline two\r\n";
        let doc = parse_srs(text, "p").unwrap();
        assert_eq!(doc.use_cases.len(), 2);
        assert_eq!(doc.use_cases[0].title, "A");
        assert_eq!(doc.use_cases[0].body, "line one");
    }
}
