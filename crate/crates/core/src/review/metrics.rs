use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Category, ReviewError};
use crate::suite::Approach;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub valid_implemented: usize,
    pub not_implemented_but_valid: usize,
    pub not_applicable: usize,
    pub redundant: usize,
}

impl CategoryCounts {
    pub fn add(&mut self, category: Category) {
        *self.slot(category) += 1;
    }

    fn slot(&mut self, category: Category) -> &mut usize {
        match category {
            Category::ValidImplemented => &mut self.valid_implemented,
            Category::NotImplementedButValid => &mut self.not_implemented_but_valid,
            Category::NotApplicable => &mut self.not_applicable,
            Category::Redundant => &mut self.redundant,
        }
    }

    pub fn total(&self) -> usize {
        self.valid_implemented
            + self.not_implemented_but_valid
            + self.not_applicable
            + self.redundant
    }

    pub fn from_categories<'a>(categories: impl IntoIterator<Item = &'a Category>) -> Self {
        let mut counts = CategoryCounts::default();
        for c in categories {
            counts.add(*c);
        }
        counts
    }
}

/// One row of the coverage table. Percentages are over reviewed cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectMetrics {
    pub project: String,
    pub counts: CategoryCounts,
    pub reviewed: usize,
    pub pending: usize,
    pub pct_valid_implemented: f64,
    pub pct_not_impl_valid: f64,
    pub pct_not_applicable: f64,
    pub pct_redundant: f64,
    pub missed_count: usize,
}

impl ProjectMetrics {
    pub fn from_counts(
        project: impl Into<String>,
        counts: CategoryCounts,
        pending: usize,
        missed_count: usize,
    ) -> Result<Self, ReviewError> {
        let reviewed = counts.total();
        if reviewed == 0 {
            return Err(ReviewError::NothingReviewed);
        }
        let pct = |n: usize| 100.0 * n as f64 / reviewed as f64;
        Ok(ProjectMetrics {
            project: project.into(),
            counts,
            reviewed,
            pending,
            pct_valid_implemented: pct(counts.valid_implemented),
            pct_not_impl_valid: pct(counts.not_implemented_but_valid),
            pct_not_applicable: pct(counts.not_applicable),
            pct_redundant: pct(counts.redundant),
            missed_count,
        })
    }

    pub fn percentages(&self) -> [f64; 4] {
        [
            self.pct_valid_implemented,
            self.pct_not_impl_valid,
            self.pct_not_applicable,
            self.pct_redundant,
        ]
    }
}

/// Metrics for one project from its current verdicts. Cases without a
/// verdict count as pending and stay out of the denominators.
pub fn compute_metrics(
    project: &str,
    current: impl IntoIterator<Item = Category>,
    total_cases: usize,
    missed_count: usize,
) -> Result<ProjectMetrics, ReviewError> {
    let mut counts = CategoryCounts::default();
    for c in current {
        counts.add(c);
    }
    let pending = total_cases.saturating_sub(counts.total());
    ProjectMetrics::from_counts(project, counts, pending, missed_count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub pct_valid_implemented: f64,
    pub pct_not_impl_valid: f64,
    pub pct_not_applicable: f64,
    pub pct_redundant: f64,
    pub missed_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub projects: Vec<ProjectMetrics>,
    pub average: AverageRow,
}

/// Arithmetic mean, summed in ascending order so the result does not depend
/// on input order.
fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unweighted mean of each per-project percentage and of missed counts.
pub fn aggregate_metrics(projects: &[ProjectMetrics]) -> Result<MetricsReport, ReviewError> {
    if projects.is_empty() {
        return Err(ReviewError::NoProjects);
    }
    let field = |f: fn(&ProjectMetrics) -> f64| mean(projects.iter().map(f));
    Ok(MetricsReport {
        average: AverageRow {
            pct_valid_implemented: field(|p| p.pct_valid_implemented),
            pct_not_impl_valid: field(|p| p.pct_not_impl_valid),
            pct_not_applicable: field(|p| p.pct_not_applicable),
            pct_redundant: field(|p| p.pct_redundant),
            missed_count: field(|p| p.missed_count as f64),
        },
        projects: projects.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproachRun {
    pub project: String,
    pub approach: Approach,
    pub canonical_count: usize,
    pub use_case_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub project: String,
    /// Test cases per use case, by approach.
    pub averages: BTreeMap<Approach, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub approaches: Vec<Approach>,
    pub rows: Vec<ComparisonRow>,
    pub average: BTreeMap<Approach, f64>,
}

/// Cases per use case for every project and approach; the average row is
/// the unweighted mean over projects. Projects keep first-seen order and a
/// later run for the same project and approach replaces an earlier one.
pub fn compare_approaches(runs: &[ApproachRun]) -> Result<ComparisonTable, ReviewError> {
    let mut rows: Vec<ComparisonRow> = Vec::new();
    for run in runs {
        if run.use_case_count == 0 {
            return Err(ReviewError::ZeroUseCases(run.project.clone()));
        }
        let avg = run.canonical_count as f64 / run.use_case_count as f64;
        match rows.iter_mut().find(|r| r.project == run.project) {
            Some(row) => {
                row.averages.insert(run.approach, avg);
            }
            None => rows.push(ComparisonRow {
                project: run.project.clone(),
                averages: BTreeMap::from([(run.approach, avg)]),
            }),
        }
    }
    // Single first: it is the baseline column.
    let mut approaches: Vec<Approach> = [Approach::Single, Approach::Chain]
        .into_iter()
        .filter(|a| rows.iter().any(|r| r.averages.contains_key(a)))
        .collect();
    approaches.dedup();
    let average = approaches
        .iter()
        .map(|a| {
            (
                *a,
                mean(rows.iter().filter_map(|r| r.averages.get(a).copied())),
            )
        })
        .collect();
    Ok(ComparisonTable {
        approaches,
        rows,
        average,
    })
}

/// Rounds half away from zero at `places` decimals, after first snapping to
/// 9 decimals so binary representation error cannot flip a tie.
pub fn round_half_up(value: f64, places: u32) -> f64 {
    format_fixed(value, places).parse().unwrap_or(value)
}

pub fn format_2dp(value: f64) -> String {
    format_fixed(value, 2)
}

fn format_fixed(value: f64, places: u32) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let snapped = format!("{:.9}", value.abs());
    let (int, frac) = snapped.split_once('.').unwrap_or((&snapped, ""));
    let p = places as usize;
    let scale = 10u128.pow(places);
    let mut scaled: u128 = int.parse::<u128>().unwrap_or(0) * scale;
    if p > 0 {
        scaled += frac[..p].parse::<u128>().unwrap_or(0);
    }
    if frac.as_bytes().get(p).is_some_and(|d| *d >= b'5') {
        scaled += 1;
    }
    let sign = if value < 0.0 && scaled != 0 { "-" } else { "" };
    if p == 0 {
        format!("{sign}{scaled}")
    } else {
        format!(
            "{sign}{}.{:0width$}",
            scaled / scale,
            scaled % scale,
            width = p
        )
    }
}
