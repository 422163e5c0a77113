use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EquivalenceConfig, SuiteUnion};
use crate::case::TestCaseDesign;
use crate::corpus::SrsDocument;
use crate::llm::{ChatMessage, ChatSession, GatewayError, SessionFactory};
use crate::prompt::{
    build_familiarization_prompt, build_single_prompt, build_use_case_prompt,
    parse_test_case_table, PromptError, RowNotice,
};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 8;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// Familiarization prompt, then one prompt per use case.
    #[default]
    Chain,
    /// Whole document and instructions in one prompt.
    Single,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Chain => "chain",
            Approach::Single => "single",
        })
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" => Ok(Approach::Chain),
            "single" => Ok(Approach::Single),
            other => Err(format!(
                "unknown approach {other:?} (expected chain or single)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("{context}: {source}")]
    Gateway {
        context: String,
        #[source]
        source: GatewayError,
    },
    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: PromptError,
    },
    #[error("InvalidMaxAttempts: max_attempts must be at least 1")]
    InvalidMaxAttempts,
}

impl GenerateError {
    pub fn code(&self) -> &'static str {
        match self {
            GenerateError::Gateway { source, .. } => source.code(),
            GenerateError::Parse { source, .. } => source.code(),
            GenerateError::InvalidMaxAttempts => "InvalidMaxAttempts",
        }
    }
}

/// Rows produced by one generation session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttemptOutput {
    pub cases: Vec<TestCaseDesign>,
    /// Table repair notices, keyed by use case id (empty in single mode).
    pub notices: Vec<(String, RowNotice)>,
}

fn send(
    session: &mut ChatSession,
    text: String,
    context: impl Fn() -> String,
) -> Result<String, GenerateError> {
    session
        .send(ChatMessage::user(text))
        .map(|m| m.content)
        .map_err(|source| GenerateError::Gateway {
            context: context(),
            source,
        })
}

/// Runs the prompt chain in `session`: the familiarization prompt, then one
/// prompt per use case in document order.
pub fn run_chain_session(
    doc: &SrsDocument,
    session: &mut ChatSession,
    attempt: u32,
) -> Result<AttemptOutput, GenerateError> {
    let mut out = AttemptOutput::default();
    send(session, build_familiarization_prompt(doc).text, || {
        format!("attempt {attempt}, familiarization")
    })?;
    for uc in &doc.use_cases {
        let context = || format!("attempt {attempt}, use case {}", uc.uc_id);
        let reply = send(session, build_use_case_prompt(uc, &doc.title).text, context)?;
        let parsed = parse_test_case_table(&reply).map_err(|source| GenerateError::Parse {
            context: context(),
            source,
        })?;
        for case in parsed.cases {
            let row = out.cases.len();
            out.cases
                .push(case.with_uc(&uc.uc_id).with_provenance(attempt, row));
        }
        out.notices
            .extend(parsed.notices.into_iter().map(|n| (uc.uc_id.clone(), n)));
    }
    Ok(out)
}

pub fn run_single_session(
    doc: &SrsDocument,
    session: &mut ChatSession,
    attempt: u32,
) -> Result<AttemptOutput, GenerateError> {
    let context = || format!("attempt {attempt}, single prompt");
    let reply = send(session, build_single_prompt(doc).text, context)?;
    let parsed = parse_test_case_table(&reply).map_err(|source| GenerateError::Parse {
        context: context(),
        source,
    })?;
    let cases = parsed
        .cases
        .into_iter()
        .enumerate()
        .map(|(row, case)| case.with_provenance(attempt, row))
        .collect();
    let notices = parsed
        .notices
        .into_iter()
        .map(|n| (String::new(), n))
        .collect();
    Ok(AttemptOutput { cases, notices })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixpointConfig {
    pub equivalence: EquivalenceConfig,
    pub approach: Approach,
    pub max_attempts: u32,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        FixpointConfig {
            equivalence: EquivalenceConfig::default(),
            approach: Approach::Chain,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

/// Passed to the checkpoint callback after every merged attempt.
pub struct AttemptReport<'a> {
    pub attempt: u32,
    pub session: &'a ChatSession,
    pub output: &'a AttemptOutput,
    pub added: usize,
    pub suite: &'a SuiteUnion,
}

#[derive(Debug, Error)]
#[error("{source}")]
pub struct FixpointError {
    pub attempt: u32,
    /// Union of the attempts that completed before the failure.
    pub partial: Box<SuiteUnion>,
    #[source]
    pub source: GenerateError,
}

impl FixpointError {
    pub fn code(&self) -> &'static str {
        self.source.code()
    }
}

/// Runs fresh sessions until an attempt adds no new canonical case or
/// `max_attempts` is reached. `checkpoint` sees every merged attempt before
/// the next one starts, so a failure leaves the completed union persisted.
pub fn fixpoint_generate(
    doc: &SrsDocument,
    sessions: &dyn SessionFactory,
    cfg: &FixpointConfig,
    checkpoint: &mut dyn FnMut(&AttemptReport<'_>) -> std::io::Result<()>,
) -> Result<SuiteUnion, FixpointError> {
    let mut suite = SuiteUnion::new(cfg.equivalence);
    suite.approach = cfg.approach;
    if cfg.max_attempts == 0 {
        return Err(FixpointError {
            attempt: 0,
            partial: Box::new(suite),
            source: GenerateError::InvalidMaxAttempts,
        });
    }
    for attempt in 1..=cfg.max_attempts {
        let mut session = sessions.open_session(&format!("attempt-{attempt}"));
        let result = match cfg.approach {
            Approach::Chain => run_chain_session(doc, &mut session, attempt),
            Approach::Single => run_single_session(doc, &mut session, attempt),
        };
        let output = match result {
            Ok(output) => output,
            Err(source) => {
                return Err(FixpointError {
                    attempt,
                    partial: Box::new(suite),
                    source,
                })
            }
        };
        let added = suite.merge(output.cases.iter().cloned());
        if added == 0 {
            suite.fixpoint_reached = true;
        }
        tracing::info!(
            attempt,
            rows = output.cases.len(),
            added,
            total = suite.len(),
            "attempt merged"
        );
        let report = AttemptReport {
            attempt,
            session: &session,
            output: &output,
            added,
            suite: &suite,
        };
        if let Err(e) = checkpoint(&report) {
            let source = GenerateError::Gateway {
                context: format!("attempt {attempt}, checkpoint"),
                source: e.into(),
            };
            return Err(FixpointError {
                attempt,
                partial: Box::new(suite),
                source,
            });
        }
        if suite.fixpoint_reached {
            break;
        }
    }
    Ok(suite)
}
