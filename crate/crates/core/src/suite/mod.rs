//! Canonical test suites.
//!
//! Generated cases are merged greedily: each incoming case is compared with
//! the canonical cases in insertion order and joins the first one whose
//! token Jaccard similarity reaches the threshold; otherwise it becomes a new
//! canonical case with the next `TC-n` id. Comments never take part in the
//! comparison.

mod generate;
mod index;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::TestCaseDesign;
use index::SimilarityIndex;

pub use generate::{
    fixpoint_generate, run_chain_session, run_single_session, Approach, AttemptOutput,
    AttemptReport, FixpointConfig, FixpointError, GenerateError, DEFAULT_MAX_ATTEMPTS,
};

pub const DEFAULT_THRESHOLD: f64 = 0.75;

#[derive(Debug, Error, PartialEq)]
pub enum SuiteError {
    #[error("InvalidThreshold: {0} is outside (0, 1]")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationPolicy {
    /// Lowercase, non-alphanumerics to spaces, split on whitespace.
    #[default]
    LowercaseAlnumV1,
}

impl fmt::Display for NormalizationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("lowercase-alnum-v1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConfig {
    pub threshold: f64,
    #[serde(default)]
    pub normalization: NormalizationPolicy,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig {
            threshold: DEFAULT_THRESHOLD,
            normalization: NormalizationPolicy::default(),
        }
    }
}

impl EquivalenceConfig {
    pub fn with_threshold(threshold: f64) -> Result<Self, SuiteError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(SuiteError::InvalidThreshold(threshold));
        }
        Ok(EquivalenceConfig {
            threshold,
            ..Default::default()
        })
    }
}

/// Lowercased alphanumeric tokens; punctuation acts as a separator.
pub fn normalize(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    // Filter after lowercasing: some capitals lower to a letter plus a
    // combining mark, which must split like any other punctuation.
    for c in text.chars().flat_map(char::to_lowercase) {
        cleaned.push(if c.is_alphanumeric() { c } else { ' ' });
    }
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Token set over the three semantic fields.
pub fn case_tokens(case: &TestCaseDesign) -> BTreeSet<String> {
    case.semantic_fields()
        .iter()
        .flat_map(|f| normalize(f))
        .collect()
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    ratio(inter, a.len() + b.len() - inter)
}

/// `inter / union` as used by every similarity path.
pub(crate) fn ratio(inter: usize, union: usize) -> f64 {
    inter as f64 / union as f64
}

pub fn similarity(a: &TestCaseDesign, b: &TestCaseDesign) -> f64 {
    jaccard(&case_tokens(a), &case_tokens(b))
}

/// Deduplicated suite built by successive greedy merges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteUnion {
    pub config: EquivalenceConfig,
    #[serde(default)]
    pub approach: Approach,
    cases: Vec<TestCaseDesign>,
    pub attempts_run: u32,
    pub fixpoint_reached: bool,
    /// New canonical cases contributed by each merge, in order.
    pub growth_history: Vec<usize>,
    #[serde(skip)]
    index: SimilarityIndex,
}

impl PartialEq for SuiteUnion {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.approach == other.approach
            && self.cases == other.cases
            && self.attempts_run == other.attempts_run
            && self.fixpoint_reached == other.fixpoint_reached
            && self.growth_history == other.growth_history
    }
}

impl SuiteUnion {
    pub fn new(config: EquivalenceConfig) -> Self {
        SuiteUnion {
            config,
            approach: Approach::default(),
            cases: Vec::new(),
            attempts_run: 0,
            fixpoint_reached: false,
            growth_history: Vec::new(),
            index: SimilarityIndex::default(),
        }
    }

    pub fn cases(&self) -> &[TestCaseDesign] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn get(&self, tc_id: &str) -> Option<&TestCaseDesign> {
        self.position(tc_id).map(|i| &self.cases[i])
    }

    pub fn contains(&self, tc_id: &str) -> bool {
        self.position(tc_id).is_some()
    }

    fn position(&self, tc_id: &str) -> Option<usize> {
        let n: usize = tc_id.strip_prefix("TC-")?.parse().ok()?;
        (n >= 1 && n <= self.cases.len() && self.cases[n - 1].id() == tc_id).then(|| n - 1)
    }

    pub fn ids(&self) -> Vec<String> {
        self.cases.iter().map(|c| c.id().to_string()).collect()
    }

    fn ensure_index(&mut self) {
        if self.index.len() != self.cases.len() {
            self.index = SimilarityIndex::default();
            for case in &self.cases {
                self.index.insert(case);
            }
        }
    }

    /// Canonical position of the first case `case` would join, if any.
    pub fn find_match(&mut self, case: &TestCaseDesign) -> Option<usize> {
        self.ensure_index();
        self.index.first_match(case, self.config.threshold)
    }

    /// Merges `incoming` in order and records the growth. Returns the number
    /// of new canonical cases.
    pub fn merge(&mut self, incoming: impl IntoIterator<Item = TestCaseDesign>) -> usize {
        self.ensure_index();
        let mut added = 0;
        for mut case in incoming {
            match self.index.first_match(&case, self.config.threshold) {
                Some(pos) => {
                    let canonical = &mut self.cases[pos];
                    canonical.provenance.extend(case.provenance);
                }
                None => {
                    case.tc_id = Some(format!("TC-{}", self.cases.len() + 1));
                    self.index.insert(&case);
                    self.cases.push(case);
                    added += 1;
                }
            }
        }
        self.growth_history.push(added);
        self.attempts_run = self.growth_history.len() as u32;
        added
    }
}

/// Functional form of [`SuiteUnion::merge`] under `cfg`.
pub fn union_merge(
    mut suite: SuiteUnion,
    incoming: Vec<TestCaseDesign>,
    cfg: &EquivalenceConfig,
) -> (SuiteUnion, usize) {
    suite.config = *cfg;
    let added = suite.merge(incoming);
    (suite, added)
}
