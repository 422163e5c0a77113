//! Prompt construction and reply parsing.
//!
//! Generation uses a two-stage chain: a familiarization prompt carrying the
//! whole requirements document, then one prompt per use case asking for a
//! four-column table. A single-prompt variant and a suite-level redundancy
//! prompt share the same embedding rules: every payload goes inside a quote
//! fence that is lengthened until the payload cannot contain it.

mod reply;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{SrsDocument, UseCase};
use crate::suite::SuiteUnion;

pub use reply::parse_redundancy_response;
pub use table::{
    parse_test_case_table, render_table, NoticeKind, ParsedTable, RowNotice, TABLE_HEADERS,
};

/// Column list requested from the model, in order.
pub const COLUMN_LIST: &str = "functionality/condition to be tested, input action/input values, expected output/behavior, and additional comments";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("NoTableFound: reply contains no four-column table")]
    NoTableFound,
    #[error("UnknownCaseId: reply references {0}, which is not in the suite")]
    UnknownCaseId(String),
    #[error("MalformedGroup: line {line} names fewer than two distinct cases")]
    MalformedGroup { line: usize },
}

impl PromptError {
    pub fn code(&self) -> &'static str {
        match self {
            PromptError::NoTableFound => "NoTableFound",
            PromptError::UnknownCaseId(_) => "UnknownCaseId",
            PromptError::MalformedGroup { .. } => "MalformedGroup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Familiarization,
    UseCase,
    SingleShot,
    Redundancy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub text: String,
    /// Ids of the document, use case or test cases embedded in `text`.
    pub source_refs: Vec<String>,
}

/// Shortest run of single quotes (at least three) absent from `payload`.
pub fn fence_for(payload: &str) -> String {
    let mut fence = "'''".to_string();
    while payload.contains(&fence) {
        fence.push('\'');
    }
    fence
}

/// Wraps `payload` in a fence on its own lines.
pub fn fenced(payload: &str) -> String {
    let fence = fence_for(payload);
    format!("{fence}\n{payload}\n{fence}")
}

pub fn build_familiarization_prompt(doc: &SrsDocument) -> PromptBundle {
    let text = format!(
        "You are a software engineer. You are in the first stage of the Software Development Life Cycle, \
         where you are provided with the SRS of a {title}. The text given below in triple quotes is the \
         System Requirements Specification of this Portal. Go through it, and you will refer to it for \
         answering the questions in upcoming prompts.\nSRS: {body}",
        title = doc.title,
        body = fenced(&doc.raw_text),
    );
    PromptBundle {
        kind: PromptKind::Familiarization,
        text,
        source_refs: vec![doc.project_id.clone()],
    }
}

fn use_case_payload(uc: &UseCase) -> String {
    format!("{}\n{}", uc.title, uc.body)
}

pub fn build_use_case_prompt(uc: &UseCase, project_title: &str) -> PromptBundle {
    let text = format!(
        "Using the SRS of the {project_title} that was provided earlier, generate all possible test case \
         designs, using Specification-Based technique, for each possible use case in a tabular format \
         having the following 4 columns: {COLUMN_LIST}.\nUse case: {body}",
        body = fenced(&use_case_payload(uc)),
    );
    PromptBundle {
        kind: PromptKind::UseCase,
        text,
        source_refs: vec![uc.uc_id.clone()],
    }
}

pub fn build_single_prompt(doc: &SrsDocument) -> PromptBundle {
    let text = format!(
        "You are a software engineer. The text given below in triple quotes is the System Requirements \
         Specification of a {title}. Using this SRS, generate all possible test case designs, using \
         Specification-Based technique, for every use case it contains, in a single table in a tabular \
         format having the following 4 columns: {COLUMN_LIST}.\nSRS: {body}",
        title = doc.title,
        body = fenced(&doc.raw_text),
    );
    PromptBundle {
        kind: PromptKind::SingleShot,
        text,
        source_refs: vec![doc.project_id.clone()],
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn build_redundancy_prompt(suite: &SuiteUnion) -> PromptBundle {
    let listing: Vec<String> = suite
        .cases()
        .iter()
        .map(|c| {
            format!(
                "{} | {} | {} | {}",
                c.id(),
                one_line(&c.condition),
                one_line(&c.input_action),
                one_line(&c.expected_output)
            )
        })
        .collect();
    let text = format!(
        "Using the SRS that was provided earlier, review the complete suite of test case designs given \
         below in triple quotes. Each line has the form `id | functionality/condition to be tested | \
         input action/input values | expected output/behavior`. Flag test cases that might overlap or \
         repeat existing ones within the suite, considering the entire SRS rather than one use case at a \
         time.\nReply with one line per group of redundant test cases, in the form\n\
         GROUP: <id>, <id>[, <id> ...] | <one-line rationale>\n\
         Each group must name at least two ids from the suite. The rationale may be left empty. Do not \
         start any other line with GROUP:. If nothing is redundant, reply NONE.\nTest cases: {body}",
        body = fenced(&listing.join("\n")),
    );
    let source_refs = suite.cases().iter().map(|c| c.id().to_string()).collect();
    PromptBundle {
        kind: PromptKind::Redundancy,
        text,
        source_refs,
    }
}
