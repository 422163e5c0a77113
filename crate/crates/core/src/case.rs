use serde::{Deserialize, Serialize};

/// Where a generated row came from: attempt number (1-based) and row index
/// within that attempt's concatenated output (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub attempt: u32,
    pub row: usize,
}

/// One four-column test case design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCaseDesign {
    /// Assigned when the case becomes canonical in a suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tc_id: Option<String>,
    /// Originating use case; empty for single-prompt generation.
    #[serde(default)]
    pub uc_id: String,
    pub condition: String,
    pub input_action: String,
    pub expected_output: String,
    #[serde(default)]
    pub comments: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Provenance>,
}

impl TestCaseDesign {
    pub fn new(
        condition: impl Into<String>,
        input_action: impl Into<String>,
        expected_output: impl Into<String>,
        comments: impl Into<String>,
    ) -> Self {
        TestCaseDesign {
            tc_id: None,
            uc_id: String::new(),
            condition: condition.into(),
            input_action: input_action.into(),
            expected_output: expected_output.into(),
            comments: comments.into(),
            provenance: Vec::new(),
        }
    }

    pub fn with_uc(mut self, uc_id: impl Into<String>) -> Self {
        self.uc_id = uc_id.into();
        self
    }

    pub fn with_provenance(mut self, attempt: u32, row: usize) -> Self {
        self.provenance.push(Provenance { attempt, row });
        self
    }

    pub fn id(&self) -> &str {
        self.tc_id.as_deref().unwrap_or("")
    }

    /// The three fields that carry meaning; comments are excluded.
    pub fn semantic_fields(&self) -> [&str; 3] {
        [&self.condition, &self.input_action, &self.expected_output]
    }

    pub fn is_field_complete(&self) -> bool {
        self.semantic_fields().iter().all(|f| !f.trim().is_empty())
    }
}
