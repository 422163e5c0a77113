use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{compute_metrics, ApproachRun, ProjectMetrics};
use super::{Category, MissedTest, ReviewError, ReviewVerdict, VerdictLog};
use crate::case::TestCaseDesign;
use crate::corpus::SrsDocument;
use crate::redundancy::{
    align_redundancies, AlignmentReport, FlagStore, RedundancyFlag, ValidationVerdict,
};
use crate::suite::{Approach, SuiteUnion};

pub const SRS_FILE: &str = "srs.json";
pub const SUITE_FILE: &str = "suite.json";
pub const SINGLE_SUITE_FILE: &str = "suite-single.json";
pub const VERDICTS_FILE: &str = "verdicts.json";
pub const REDUNDANCY_FILE: &str = "redundancy.json";
pub const MISSED_FILE: &str = "missed.json";
pub const RUNS_FILE: &str = "runs.json";
pub const SESSIONS_DIR: &str = "sessions";
pub const CASSETTES_DIR: &str = "cassettes";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("ProjectNotFound: {0} is not a project directory")]
    NotFound(String),
    #[error("StoreCorrupt: {file}: {message}")]
    Corrupt { file: String, message: String },
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NotFound(_) => "ProjectNotFound",
            StoreError::Corrupt { .. } => "StoreCorrupt",
            StoreError::Io(_) => "IoError",
        }
    }
}

/// Pretty JSON with a trailing newline; the on-disk form of every record.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("record serializes");
    text.push('\n');
    text
}

/// Writes through a temp file in the same directory and renames, so readers
/// never observe a half-written record.
fn write_atomic(path: &Path, contents: &str) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| StoreError::Io(e.error))?;
    Ok(())
}

/// One project directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectStore {
    root: PathBuf,
}

impl ProjectStore {
    /// Creates the directory layout; existing records are left alone.
    pub fn init(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let store = ProjectStore { root: root.into() };
        std::fs::create_dir_all(store.root.join(SESSIONS_DIR))?;
        std::fs::create_dir_all(store.root.join(CASSETTES_DIR))?;
        if !store.path(VERDICTS_FILE).exists() {
            store.write(VERDICTS_FILE, &VerdictLog::default())?;
        }
        if !store.path(MISSED_FILE).exists() {
            store.write(MISSED_FILE, &Vec::<MissedTest>::new())?;
        }
        if !store.path(REDUNDANCY_FILE).exists() {
            store.write(REDUNDANCY_FILE, &FlagStore::default())?;
        }
        Ok(store)
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(StoreError::NotFound(root.display().to_string()));
        }
        Ok(ProjectStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn name(&self) -> String {
        self.root
            .canonicalize()
            .unwrap_or_else(|_| self.root.clone())
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "project".to_string())
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    pub fn session_path(&self, name: &str) -> PathBuf {
        self.root.join(SESSIONS_DIR).join(format!("{name}.json"))
    }

    pub fn cassette_path(&self, name: &str) -> PathBuf {
        self.root.join(CASSETTES_DIR).join(format!("{name}.json"))
    }

    pub fn suite_file(approach: Approach) -> &'static str {
        match approach {
            Approach::Chain => SUITE_FILE,
            Approach::Single => SINGLE_SUITE_FILE,
        }
    }

    pub fn write<T: Serialize + ?Sized>(&self, file: &str, value: &T) -> Result<(), StoreError> {
        write_atomic(&self.path(file), &to_json_pretty(value))
    }

    pub fn write_text(&self, file: &str, text: &str) -> Result<(), StoreError> {
        write_atomic(&self.path(file), text)
    }

    fn read_opt<T: DeserializeOwned>(&self, file: &str) -> Result<Option<T>, StoreError> {
        let path = self.path(file);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| StoreError::Corrupt {
                file: file.to_string(),
                message: e.to_string(),
            })
    }

    pub fn load(&self) -> Result<Project, StoreError> {
        let project = Project {
            name: self.name(),
            srs: self.read_opt(SRS_FILE)?,
            suite: self.read_opt(SUITE_FILE)?,
            single_suite: self.read_opt(SINGLE_SUITE_FILE)?,
            verdicts: self.read_opt(VERDICTS_FILE)?.unwrap_or_default(),
            redundancy: self.read_opt(REDUNDANCY_FILE)?.unwrap_or_default(),
            missed: self.read_opt(MISSED_FILE)?.unwrap_or_default(),
            runs: self.read_opt(RUNS_FILE)?.unwrap_or_default(),
        };
        project.check()?;
        Ok(project)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestCaseStatus {
    Pending,
    Reviewed,
    All,
}

impl std::str::FromStr for TestCaseStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pending" => Ok(TestCaseStatus::Pending),
            "reviewed" => Ok(TestCaseStatus::Reviewed),
            "all" => Ok(TestCaseStatus::All),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestCaseView {
    #[serde(flatten)]
    pub case: TestCaseDesign,
    pub verdict: Option<ReviewVerdict>,
    pub history_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectSummary {
    pub project: String,
    pub title: Option<String>,
    pub use_cases: usize,
    pub canonical_cases: usize,
    pub reviewed: usize,
    pub pending: usize,
    pub missed: usize,
    pub attempts_run: u32,
    pub fixpoint_reached: bool,
    pub growth_history: Vec<usize>,
    pub llm_flags: usize,
    pub developer_flags: usize,
}

/// Everything persisted for one project.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Project {
    pub name: String,
    pub srs: Option<SrsDocument>,
    pub suite: Option<SuiteUnion>,
    pub single_suite: Option<SuiteUnion>,
    pub verdicts: VerdictLog,
    pub redundancy: FlagStore,
    pub missed: Vec<MissedTest>,
    pub runs: Vec<ApproachRun>,
}

impl Project {
    /// Cross-file consistency: verdicts and flags must name suite cases.
    fn check(&self) -> Result<(), StoreError> {
        let corrupt = |file: &str, message: String| StoreError::Corrupt {
            file: file.to_string(),
            message,
        };
        let Some(suite) = &self.suite else {
            if !self.verdicts.is_empty() {
                return Err(corrupt(
                    VERDICTS_FILE,
                    "verdicts exist but there is no suite".into(),
                ));
            }
            return Ok(());
        };
        if let Some(v) = self
            .verdicts
            .history
            .iter()
            .find(|v| !suite.contains(&v.tc_id))
        {
            return Err(corrupt(
                VERDICTS_FILE,
                format!("verdict for unknown case {}", v.tc_id),
            ));
        }
        for flag in &self.redundancy.flags {
            if let Some(id) = flag.member_ids.iter().find(|id| !suite.contains(id)) {
                return Err(corrupt(
                    REDUNDANCY_FILE,
                    format!("flag {} names unknown case {id}", flag.flag_id),
                ));
            }
        }
        Ok(())
    }

    pub fn suite(&self) -> Result<&SuiteUnion, ReviewError> {
        self.suite.as_ref().ok_or(ReviewError::NoSuite)
    }

    pub fn srs(&self) -> Result<&SrsDocument, ReviewError> {
        self.srs.as_ref().ok_or(ReviewError::NoDocument)
    }

    pub fn submit_verdict(
        &mut self,
        tc_id: &str,
        category: Category,
        reviewer: &str,
        tags: Vec<String>,
        at: DateTime<Utc>,
    ) -> Result<ReviewVerdict, ReviewError> {
        if !self.suite()?.contains(tc_id) {
            return Err(ReviewError::UnknownTestCase(tc_id.to_string()));
        }
        let verdict = ReviewVerdict {
            tc_id: tc_id.to_string(),
            category,
            reviewer: reviewer.to_string(),
            timestamp: at,
            tags,
        };
        self.verdicts.push(verdict.clone());
        Ok(verdict)
    }

    pub fn record_missed(
        &mut self,
        description: &str,
        reviewer: &str,
        at: DateTime<Utc>,
    ) -> Result<MissedTest, ReviewError> {
        let description = description.trim();
        if description.is_empty() {
            return Err(ReviewError::EmptyDescription);
        }
        let missed = MissedTest {
            description: description.to_string(),
            reviewer: reviewer.to_string(),
            timestamp: at,
        };
        self.missed.push(missed.clone());
        Ok(missed)
    }

    pub fn validate_flag(
        &mut self,
        flag_id: &str,
        verdict: ValidationVerdict,
        reviewer: &str,
        at: DateTime<Utc>,
    ) -> Result<RedundancyFlag, ReviewError> {
        Ok(self
            .redundancy
            .validate_flag(flag_id, verdict, reviewer, at)?
            .clone())
    }

    pub fn add_developer_flag(
        &mut self,
        member_ids: Vec<String>,
        rationale: &str,
    ) -> Result<RedundancyFlag, ReviewError> {
        let known = self.suite()?.ids();
        Ok(self
            .redundancy
            .add_developer_flag(member_ids, rationale, &known)?
            .clone())
    }

    pub fn metrics(&self) -> Result<ProjectMetrics, ReviewError> {
        let suite = self.suite()?;
        let current = self.verdicts.current();
        let categories = suite
            .cases()
            .iter()
            .filter_map(|c| current.get(c.id()).map(|v| v.category));
        compute_metrics(&self.name, categories, suite.len(), self.missed.len())
    }

    pub fn alignment(&self) -> Result<AlignmentReport, ReviewError> {
        let suite = self.suite()?;
        Ok(align_redundancies(
            &self.redundancy.llm_flags(),
            &self.redundancy.developer_flags(),
            suite.len(),
        )?)
    }

    pub fn test_cases(&self, status: TestCaseStatus) -> Result<Vec<TestCaseView>, ReviewError> {
        let suite = self.suite()?;
        Ok(suite
            .cases()
            .iter()
            .map(|case| TestCaseView {
                case: case.clone(),
                verdict: self.verdicts.current_for(case.id()).cloned(),
                history_len: self.verdicts.history_for(case.id()).len(),
            })
            .filter(|v| match status {
                TestCaseStatus::All => true,
                TestCaseStatus::Pending => v.verdict.is_none(),
                TestCaseStatus::Reviewed => v.verdict.is_some(),
            })
            .collect())
    }

    pub fn summary(&self) -> ProjectSummary {
        let suite = self.suite.as_ref();
        let canonical = suite.map_or(0, |s| s.len());
        let reviewed = suite.map_or(0, |s| {
            let current = self.verdicts.current();
            s.cases()
                .iter()
                .filter(|c| current.contains_key(c.id()))
                .count()
        });
        ProjectSummary {
            project: self.name.clone(),
            title: self.srs.as_ref().map(|d| d.title.clone()),
            use_cases: self.srs.as_ref().map_or(0, |d| d.use_cases.len()),
            canonical_cases: canonical,
            reviewed,
            pending: canonical - reviewed,
            missed: self.missed.len(),
            attempts_run: suite.map_or(0, |s| s.attempts_run),
            fixpoint_reached: suite.is_some_and(|s| s.fixpoint_reached),
            growth_history: suite.map(|s| s.growth_history.clone()).unwrap_or_default(),
            llm_flags: self.redundancy.llm_flags().len(),
            developer_flags: self.redundancy.developer_flags().len(),
        }
    }

    /// Applies a bulk review file. Either every entry applies or none does.
    pub fn apply_import(
        &mut self,
        import: &ReviewImport,
        now: DateTime<Utc>,
    ) -> Result<ImportSummary, ReviewError> {
        let mut next = self.clone();
        for v in &import.verdicts {
            let category = v.category.parse()?;
            next.submit_verdict(
                &v.tc_id,
                category,
                &v.reviewer,
                v.tags.clone(),
                v.timestamp.unwrap_or(now),
            )?;
        }
        for m in &import.missed {
            next.record_missed(&m.description, &m.reviewer, m.timestamp.unwrap_or(now))?;
        }
        for f in &import.developer_flags {
            next.add_developer_flag(f.member_ids.clone(), &f.rationale)?;
        }
        for v in &import.validations {
            next.validate_flag(
                &v.flag_id,
                v.verdict,
                &v.reviewer,
                v.timestamp.unwrap_or(now),
            )?;
        }
        *self = next;
        Ok(ImportSummary {
            verdicts: import.verdicts.len(),
            missed: import.missed.len(),
            developer_flags: import.developer_flags.len(),
            validations: import.validations.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictImport {
    pub tc_id: String,
    pub category: String,
    pub reviewer: String,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissedImport {
    pub description: String,
    pub reviewer: String,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeveloperFlagImport {
    pub member_ids: Vec<String>,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationImport {
    pub flag_id: String,
    pub verdict: ValidationVerdict,
    pub reviewer: String,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

/// Bulk review file accepted by `verdicts import`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReviewImport {
    pub verdicts: Vec<VerdictImport>,
    pub missed: Vec<MissedImport>,
    pub developer_flags: Vec<DeveloperFlagImport>,
    pub validations: Vec<ValidationImport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ImportSummary {
    pub verdicts: usize,
    pub missed: usize,
    pub developer_flags: usize,
    pub validations: usize,
}

/// A loaded project bound to its directory. Every mutation is written to
/// disk before it returns.
#[derive(Debug, Clone)]
pub struct ProjectHandle {
    store: ProjectStore,
    project: Project,
}

impl ProjectHandle {
    pub fn open(store: ProjectStore) -> Result<Self, StoreError> {
        let project = store.load()?;
        Ok(ProjectHandle { store, project })
    }

    pub fn store(&self) -> &ProjectStore {
        &self.store
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn submit_verdict(
        &mut self,
        tc_id: &str,
        category: Category,
        reviewer: &str,
        tags: Vec<String>,
        at: DateTime<Utc>,
    ) -> Result<ReviewVerdict, ReviewError> {
        let v = self
            .project
            .submit_verdict(tc_id, category, reviewer, tags, at)?;
        if let Err(e) = self.store.write(VERDICTS_FILE, &self.project.verdicts) {
            self.project.verdicts.history.pop();
            return Err(e.into());
        }
        Ok(v)
    }

    pub fn record_missed(
        &mut self,
        description: &str,
        reviewer: &str,
        at: DateTime<Utc>,
    ) -> Result<MissedTest, ReviewError> {
        let m = self.project.record_missed(description, reviewer, at)?;
        if let Err(e) = self.store.write(MISSED_FILE, &self.project.missed) {
            self.project.missed.pop();
            return Err(e.into());
        }
        Ok(m)
    }

    pub fn validate_flag(
        &mut self,
        flag_id: &str,
        verdict: ValidationVerdict,
        reviewer: &str,
        at: DateTime<Utc>,
    ) -> Result<RedundancyFlag, ReviewError> {
        let before = self.project.redundancy.clone();
        let flag = self.project.validate_flag(flag_id, verdict, reviewer, at)?;
        if let Err(e) = self.store.write(REDUNDANCY_FILE, &self.project.redundancy) {
            self.project.redundancy = before;
            return Err(e.into());
        }
        Ok(flag)
    }

    pub fn add_developer_flag(
        &mut self,
        member_ids: Vec<String>,
        rationale: &str,
    ) -> Result<RedundancyFlag, ReviewError> {
        let before = self.project.redundancy.clone();
        let flag = self.project.add_developer_flag(member_ids, rationale)?;
        if let Err(e) = self.store.write(REDUNDANCY_FILE, &self.project.redundancy) {
            self.project.redundancy = before;
            return Err(e.into());
        }
        Ok(flag)
    }

    pub fn apply_import(
        &mut self,
        import: &ReviewImport,
        now: DateTime<Utc>,
    ) -> Result<ImportSummary, ReviewError> {
        let before = self.project.clone();
        let summary = self.project.apply_import(import, now)?;
        let written = self
            .store
            .write(VERDICTS_FILE, &self.project.verdicts)
            .and_then(|_| self.store.write(MISSED_FILE, &self.project.missed))
            .and_then(|_| self.store.write(REDUNDANCY_FILE, &self.project.redundancy));
        if let Err(e) = written {
            self.project = before;
            return Err(e.into());
        }
        Ok(summary)
    }
}
