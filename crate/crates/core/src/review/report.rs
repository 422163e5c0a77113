//! Plain-text and CSV renderings of metrics, alignment and approach
//! comparison reports. Text tables round half-up to two decimals; CSV keeps
//! full precision.

use super::metrics::{format_2dp, ComparisonTable, MetricsReport};
use crate::redundancy::AlignmentReport;

pub const METRICS_FOOTER: &str =
    "Percentages are over reviewed cases of the post-union canonical suite; unreviewed cases are listed as pending.";
pub const ALIGNMENT_FOOTER: &str =
    "Percentages are case-weighted: a case counts once however many flags contain it.";

fn render(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn csv_string(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

const METRICS_HEADERS: [&str; 8] = [
    "Project",
    "% Valid and implemented",
    "% Not implemented but valid",
    "% Not applicable",
    "% Redundant",
    "Missed tests",
    "Reviewed",
    "Pending",
];

fn metrics_rows(report: &MetricsReport, fmt: fn(f64) -> String) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = report
        .projects
        .iter()
        .map(|p| {
            let mut row = vec![p.project.clone()];
            row.extend(p.percentages().iter().map(|v| fmt(*v)));
            row.extend([
                p.missed_count.to_string(),
                p.reviewed.to_string(),
                p.pending.to_string(),
            ]);
            row
        })
        .collect();
    let a = &report.average;
    rows.push(vec![
        "AVERAGE".to_string(),
        fmt(a.pct_valid_implemented),
        fmt(a.pct_not_impl_valid),
        fmt(a.pct_not_applicable),
        fmt(a.pct_redundant),
        fmt(a.missed_count),
        String::new(),
        String::new(),
    ]);
    rows
}

fn full(v: f64) -> String {
    v.to_string()
}

pub fn metrics_text(report: &MetricsReport) -> String {
    let mut out = render(&METRICS_HEADERS, &metrics_rows(report, format_2dp));
    out.push('\n');
    out.push_str(METRICS_FOOTER);
    out.push('\n');
    out
}

pub fn metrics_csv(report: &MetricsReport) -> String {
    csv_string(&METRICS_HEADERS, &metrics_rows(report, full))
}

const ALIGNMENT_HEADERS: [&str; 3] = ["Measure", "Cases", "Percent"];

fn alignment_rows(r: &AlignmentReport, fmt: fn(f64) -> String) -> Vec<Vec<String>> {
    vec![
        vec![
            "Canonical cases".into(),
            r.total_cases.to_string(),
            String::new(),
        ],
        vec![
            "Flagged by LLM (of all cases)".into(),
            r.llm_flagged_cases.to_string(),
            fmt(r.llm_flagged_fraction),
        ],
        vec![
            "Flagged by developers (of all cases)".into(),
            r.dev_flagged_cases.to_string(),
            fmt(r.dev_flagged_fraction),
        ],
        vec![
            "Also flagged by developers".into(),
            r.overlap_cases.to_string(),
            fmt(r.overlap_pct),
        ],
        vec![
            "New valid redundancies".into(),
            r.new_valid_cases.to_string(),
            fmt(r.new_valid_pct),
        ],
        vec![
            "False positives".into(),
            r.false_positive_cases.to_string(),
            fmt(r.false_positive_pct),
        ],
    ]
}

pub fn alignment_text(report: &AlignmentReport) -> String {
    let mut out = render(&ALIGNMENT_HEADERS, &alignment_rows(report, format_2dp));
    out.push('\n');
    out.push_str("Last three rows are percents of LLM-flagged cases. ");
    out.push_str(ALIGNMENT_FOOTER);
    out.push('\n');
    out
}

pub fn alignment_csv(report: &AlignmentReport) -> String {
    csv_string(&ALIGNMENT_HEADERS, &alignment_rows(report, full))
}

fn comparison_rows(
    table: &ComparisonTable,
    fmt: fn(f64) -> String,
) -> (Vec<String>, Vec<Vec<String>>) {
    let mut headers = vec!["Project".to_string()];
    headers.extend(
        table
            .approaches
            .iter()
            .map(|a| format!("{a} (cases per use case)")),
    );
    let cell = |v: Option<&f64>| v.map(|v| fmt(*v)).unwrap_or_else(|| "-".to_string());
    let mut rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.project.clone()];
            row.extend(table.approaches.iter().map(|a| cell(r.averages.get(a))));
            row
        })
        .collect();
    let mut avg = vec!["AVERAGE".to_string()];
    avg.extend(table.approaches.iter().map(|a| cell(table.average.get(a))));
    rows.push(avg);
    (headers, rows)
}

pub fn comparison_text(table: &ComparisonTable) -> String {
    let (headers, rows) = comparison_rows(table, format_2dp);
    let headers: Vec<&str> = headers.iter().map(String::as_str).collect();
    render(&headers, &rows)
}

pub fn comparison_csv(table: &ComparisonTable) -> String {
    let (headers, rows) = comparison_rows(table, full);
    let headers: Vec<&str> = headers.iter().map(String::as_str).collect();
    csv_string(&headers, &rows)
}
