//! Redundancy flags raised by the model and by developers, and the
//! case-weighted alignment between the two.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SrsDocument;
use crate::llm::{ChatMessage, ChatSession, GatewayError};
use crate::prompt::{
    build_familiarization_prompt, build_redundancy_prompt, parse_redundancy_response, PromptError,
};
use crate::suite::SuiteUnion;

#[derive(Debug, Error)]
pub enum RedundancyError {
    #[error("EmptySuite: the suite has no canonical cases")]
    EmptySuite,
    #[error("UnknownFlag: no flag {0}")]
    UnknownFlag(String),
    #[error("NotLlmSourced: flag {0} was raised by a developer and takes no validation")]
    NotLlmSourced(String),
    #[error("EmptyLlmSet: no test case is flagged by the model")]
    EmptyLlmSet,
    #[error("UnvalidatedCases: {} flagged case(s) still pending validation: {}", .0.len(), .0.join(", "))]
    UnvalidatedCases(Vec<String>),
    #[error("{0}")]
    Prompt(#[from] PromptError),
    #[error("redundancy session: {0}")]
    Gateway(#[from] GatewayError),
}

impl RedundancyError {
    pub fn code(&self) -> &'static str {
        match self {
            RedundancyError::EmptySuite => "EmptySuite",
            RedundancyError::UnknownFlag(_) => "UnknownFlag",
            RedundancyError::NotLlmSourced(_) => "NotLlmSourced",
            RedundancyError::EmptyLlmSet => "EmptyLlmSet",
            RedundancyError::UnvalidatedCases(_) => "UnvalidatedCases",
            RedundancyError::Prompt(e) => e.code(),
            RedundancyError::Gateway(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagSource {
    Llm,
    Developer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validation {
    Pending,
    Confirmed,
    FalsePositive,
}

/// A reviewer's judgment on an LLM flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationVerdict {
    Confirmed,
    FalsePositive,
}

impl From<ValidationVerdict> for Validation {
    fn from(v: ValidationVerdict) -> Self {
        match v {
            ValidationVerdict::Confirmed => Validation::Confirmed,
            ValidationVerdict::FalsePositive => Validation::FalsePositive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub from: Validation,
    pub to: Validation,
    pub reviewer: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyFlag {
    pub flag_id: String,
    pub source: FlagSource,
    pub member_ids: Vec<String>,
    pub rationale: String,
    pub validation: Validation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit: Vec<AuditEntry>,
}

impl RedundancyFlag {
    pub fn llm(
        flag_id: impl Into<String>,
        member_ids: Vec<String>,
        rationale: impl Into<String>,
    ) -> Self {
        RedundancyFlag {
            flag_id: flag_id.into(),
            source: FlagSource::Llm,
            member_ids,
            rationale: rationale.into(),
            validation: Validation::Pending,
            audit: Vec::new(),
        }
    }

    pub fn developer(
        flag_id: impl Into<String>,
        member_ids: Vec<String>,
        rationale: impl Into<String>,
    ) -> Self {
        RedundancyFlag {
            source: FlagSource::Developer,
            ..Self::llm(flag_id, member_ids, rationale)
        }
    }

    fn member_key(&self) -> BTreeSet<&str> {
        self.member_ids.iter().map(String::as_str).collect()
    }
}

/// Orders `TC-2` before `TC-10`.
pub fn id_order_key(id: &str) -> (String, u64, String) {
    let split = id.rfind(|c: char| !c.is_ascii_digit()).map_or(0, |i| i + 1);
    let (prefix, digits) = id.split_at(split);
    (
        prefix.to_string(),
        digits.parse().unwrap_or(0),
        id.to_string(),
    )
}

fn sorted_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = ids.into_iter().map(str::to_string).collect();
    out.sort_by_key(|id| id_order_key(id));
    out
}

/// Asks the model for redundant groups in a fresh session that first
/// receives the familiarization prompt. Identical member sets are collapsed.
pub fn flag_redundancies(
    doc: &SrsDocument,
    suite: &SuiteUnion,
    session: &mut ChatSession,
) -> Result<Vec<RedundancyFlag>, RedundancyError> {
    if suite.is_empty() {
        return Err(RedundancyError::EmptySuite);
    }
    session.send(ChatMessage::user(build_familiarization_prompt(doc).text))?;
    let reply = session.send(ChatMessage::user(build_redundancy_prompt(suite).text))?;
    let parsed = parse_redundancy_response(&reply.content, &suite.ids())?;
    let mut seen = BTreeSet::new();
    let mut flags = Vec::new();
    for mut flag in parsed {
        if !seen.insert(sorted_ids(flag.member_key())) {
            continue;
        }
        flag.flag_id = format!("RF-{}", flags.len() + 1);
        flags.push(flag);
    }
    Ok(flags)
}

/// Contents of `redundancy.json`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagStore {
    pub flags: Vec<RedundancyFlag>,
}

impl FlagStore {
    pub fn llm_flags(&self) -> Vec<RedundancyFlag> {
        self.flags
            .iter()
            .filter(|f| f.source == FlagSource::Llm)
            .cloned()
            .collect()
    }

    pub fn developer_flags(&self) -> Vec<RedundancyFlag> {
        self.flags
            .iter()
            .filter(|f| f.source == FlagSource::Developer)
            .cloned()
            .collect()
    }

    pub fn get(&self, flag_id: &str) -> Option<&RedundancyFlag> {
        self.flags.iter().find(|f| f.flag_id == flag_id)
    }

    /// Swaps in a new set of LLM flags; developer flags are kept.
    pub fn replace_llm_flags(&mut self, llm: Vec<RedundancyFlag>) {
        self.flags.retain(|f| f.source == FlagSource::Developer);
        let mut all = llm;
        all.append(&mut self.flags);
        self.flags = all;
    }

    /// Adds a developer flag over `member_ids`, all of which must be in
    /// `known_ids`. Ids are `DF-n`.
    pub fn add_developer_flag(
        &mut self,
        member_ids: Vec<String>,
        rationale: &str,
        known_ids: &[String],
    ) -> Result<&RedundancyFlag, RedundancyError> {
        let mut members: Vec<String> = Vec::new();
        for id in member_ids {
            let id = id.trim().to_string();
            if !known_ids.contains(&id) {
                return Err(PromptError::UnknownCaseId(id).into());
            }
            if !members.contains(&id) {
                members.push(id);
            }
        }
        if members.len() < 2 {
            return Err(PromptError::MalformedGroup { line: 0 }.into());
        }
        let n = self
            .flags
            .iter()
            .filter(|f| f.source == FlagSource::Developer)
            .count()
            + 1;
        self.flags.push(RedundancyFlag::developer(
            format!("DF-{n}"),
            members,
            rationale.trim(),
        ));
        Ok(self.flags.last().unwrap())
    }

    pub fn validate_flag(
        &mut self,
        flag_id: &str,
        verdict: ValidationVerdict,
        reviewer: &str,
        at: DateTime<Utc>,
    ) -> Result<&RedundancyFlag, RedundancyError> {
        let flag = self
            .flags
            .iter_mut()
            .find(|f| f.flag_id == flag_id)
            .ok_or_else(|| RedundancyError::UnknownFlag(flag_id.to_string()))?;
        if flag.source != FlagSource::Llm {
            return Err(RedundancyError::NotLlmSourced(flag_id.to_string()));
        }
        let to = Validation::from(verdict);
        if flag.validation != to {
            flag.audit.push(AuditEntry {
                from: flag.validation,
                to,
                reviewer: reviewer.to_string(),
                at,
            });
            flag.validation = to;
        }
        Ok(flag)
    }
}

/// Case-weighted comparison of LLM and developer flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub total_cases: usize,
    pub llm_flagged_cases: usize,
    pub dev_flagged_cases: usize,
    pub overlap_cases: usize,
    pub new_valid_cases: usize,
    pub false_positive_cases: usize,
    /// Percent of all canonical cases flagged by the model.
    pub llm_flagged_fraction: f64,
    /// Percent of all canonical cases flagged by developers.
    pub dev_flagged_fraction: f64,
    /// The next three are percents of model-flagged cases.
    pub overlap_pct: f64,
    pub new_valid_pct: f64,
    pub false_positive_pct: f64,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Partitions model-flagged cases into: also flagged by developers; only
/// model-flagged and confirmed; only model-flagged and rejected.
///
/// A case sitting in several model flags counts as confirmed if any of them
/// was confirmed. Developer agreement needs no validation.
pub fn align_redundancies(
    llm_flags: &[RedundancyFlag],
    dev_flags: &[RedundancyFlag],
    total_cases: usize,
) -> Result<AlignmentReport, RedundancyError> {
    let mut llm: BTreeMap<&str, Validation> = BTreeMap::new();
    for flag in llm_flags {
        for id in &flag.member_ids {
            let slot = llm.entry(id.as_str()).or_insert(Validation::Pending);
            *slot = match (*slot, flag.validation) {
                (Validation::Confirmed, _) | (_, Validation::Confirmed) => Validation::Confirmed,
                (Validation::FalsePositive, _) | (_, Validation::FalsePositive) => {
                    Validation::FalsePositive
                }
                _ => Validation::Pending,
            };
        }
    }
    if llm.is_empty() {
        return Err(RedundancyError::EmptyLlmSet);
    }
    let dev: BTreeSet<&str> = dev_flags
        .iter()
        .flat_map(|f| f.member_ids.iter().map(String::as_str))
        .collect();

    let (mut overlap, mut confirmed, mut rejected) = (0, 0, 0);
    let mut pending = Vec::new();
    for (&id, &validation) in &llm {
        if dev.contains(id) {
            overlap += 1;
            continue;
        }
        match validation {
            Validation::Confirmed => confirmed += 1,
            Validation::FalsePositive => rejected += 1,
            Validation::Pending => pending.push(id),
        }
    }
    if !pending.is_empty() {
        return Err(RedundancyError::UnvalidatedCases(sorted_ids(pending)));
    }

    let l = llm.len();
    Ok(AlignmentReport {
        total_cases,
        llm_flagged_cases: l,
        dev_flagged_cases: dev.len(),
        overlap_cases: overlap,
        new_valid_cases: confirmed,
        false_positive_cases: rejected,
        llm_flagged_fraction: pct(l, total_cases),
        dev_flagged_fraction: pct(dev.len(), total_cases),
        overlap_pct: pct(overlap, l),
        new_valid_pct: pct(confirmed, l),
        false_positive_pct: pct(rejected, l),
    })
}
