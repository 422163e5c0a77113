//! Developer review: per-case verdicts, missed tests, metrics, project
//! persistence and the HTTP service the triage UI talks to.

mod metrics;
pub mod report;
pub mod server;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::redundancy::RedundancyError;

pub use metrics::{
    aggregate_metrics, compare_approaches, compute_metrics, format_2dp, round_half_up, ApproachRun,
    AverageRow, CategoryCounts, ComparisonRow, ComparisonTable, MetricsReport, ProjectMetrics,
};
pub use store::{
    DeveloperFlagImport, ImportSummary, MissedImport, Project, ProjectHandle, ProjectStore,
    ReviewImport, StoreError, TestCaseStatus, TestCaseView, ValidationImport, VerdictImport,
};

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("UnknownTestCase: {0} is not in the project suite")]
    UnknownTestCase(String),
    #[error("UnknownCategory: {0:?} (expected valid_implemented, not_implemented_but_valid, not_applicable or redundant)")]
    UnknownCategory(String),
    #[error("EmptyDescription: a missed test needs a description")]
    EmptyDescription,
    #[error("NothingReviewed: no test cases have been reviewed")]
    NothingReviewed,
    #[error("NoProjects: at least one project report is required")]
    NoProjects,
    #[error("ZeroUseCases: project {0} reports zero use cases")]
    ZeroUseCases(String),
    #[error("NoSuite: the project has no generated suite yet")]
    NoSuite,
    #[error("NoDocument: the project has no ingested SRS yet")]
    NoDocument,
    #[error("{0}")]
    Redundancy(#[from] RedundancyError),
    #[error("{0}")]
    Store(#[from] StoreError),
}

impl ReviewError {
    pub fn code(&self) -> &'static str {
        match self {
            ReviewError::UnknownTestCase(_) => "UnknownTestCase",
            ReviewError::UnknownCategory(_) => "UnknownCategory",
            ReviewError::EmptyDescription => "EmptyDescription",
            ReviewError::NothingReviewed => "NothingReviewed",
            ReviewError::NoProjects => "NoProjects",
            ReviewError::ZeroUseCases(_) => "ZeroUseCases",
            ReviewError::NoSuite => "NoSuite",
            ReviewError::NoDocument => "NoDocument",
            ReviewError::Redundancy(e) => e.code(),
            ReviewError::Store(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ValidImplemented,
    NotImplementedButValid,
    NotApplicable,
    Redundant,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::ValidImplemented,
        Category::NotImplementedButValid,
        Category::NotApplicable,
        Category::Redundant,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::ValidImplemented => "valid_implemented",
            Category::NotImplementedButValid => "not_implemented_but_valid",
            Category::NotApplicable => "not_applicable",
            Category::Redundant => "redundant",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ReviewError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ReviewError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewVerdict {
    pub tc_id: String,
    pub category: Category,
    pub reviewer: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissedTest {
    pub description: String,
    pub reviewer: String,
    pub timestamp: DateTime<Utc>,
}

/// Every verdict ever submitted, oldest first. The latest per case is
/// current.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictLog {
    pub history: Vec<ReviewVerdict>,
}

impl VerdictLog {
    pub fn push(&mut self, verdict: ReviewVerdict) {
        self.history.push(verdict);
    }

    pub fn current(&self) -> BTreeMap<&str, &ReviewVerdict> {
        let mut out = BTreeMap::new();
        for v in &self.history {
            out.insert(v.tc_id.as_str(), v);
        }
        out
    }

    pub fn current_for(&self, tc_id: &str) -> Option<&ReviewVerdict> {
        self.history.iter().rev().find(|v| v.tc_id == tc_id)
    }

    pub fn history_for(&self, tc_id: &str) -> Vec<&ReviewVerdict> {
        self.history.iter().filter(|v| v.tc_id == tc_id).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }
}
