//! Four-column pipe tables: parsing LLM replies and emitting suites.

use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::case::TestCaseDesign;

/// Column headers as emitted by [`render_table`].
pub const TABLE_HEADERS: [&str; 4] = [
    "Functionality/ Condition to be Tested",
    "Input Action/ Input Values",
    "Expected Output/ Behaviour",
    "Additional Comments",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoticeKind {
    /// Row kept after repair.
    RowRecovered,
    /// Row discarded.
    RowDropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowNotice {
    /// 1-based position among the table's data rows.
    pub row: usize,
    pub kind: NoticeKind,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTable {
    pub cases: Vec<TestCaseDesign>,
    pub notices: Vec<RowNotice>,
}

fn split_cells(line: &str) -> Vec<String> {
    let mut body = line.trim();
    body = body.strip_prefix('|').unwrap_or(body);
    if body.ends_with('|') && !ends_with_escaped_pipe(body) {
        body = &body[..body.len() - 1];
    }
    let mut cells = Vec::new();
    let mut cell = String::new();
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(next @ ('|' | '\\')) => cell.push(next),
                Some(next) => {
                    cell.push('\\');
                    cell.push(next);
                }
                None => cell.push('\\'),
            },
            '|' => cells.push(std::mem::take(&mut cell)),
            c => cell.push(c),
        }
    }
    cells.push(cell);
    cells.into_iter().map(|c| c.trim().to_string()).collect()
}

fn ends_with_escaped_pipe(body: &str) -> bool {
    let before = &body[..body.len() - 1];
    let slashes = before.chars().rev().take_while(|&c| c == '\\').count();
    slashes % 2 == 1
}

fn is_table_line(line: &str) -> bool {
    line.contains('|') && !line.trim().is_empty()
}

fn is_separator(cells: &[String]) -> bool {
    !cells.is_empty()
        && cells.iter().all(|c| {
            let inner = c.trim_start_matches(':').trim_end_matches(':');
            !inner.is_empty() && inner.chars().all(|ch| ch == '-')
        })
}

/// Parses the first four-column table in `reply`.
///
/// Rows with three cells get an empty comments field; rows with fewer than
/// three or more than four cells, or with an empty semantic field, are
/// dropped. Every repair or drop yields a notice.
pub fn parse_test_case_table(reply: &str) -> Result<ParsedTable, PromptError> {
    let lines: Vec<&str> = reply.lines().collect();
    let mut i = 0;
    while i + 1 < lines.len() {
        if !is_table_line(lines[i]) || !is_table_line(lines[i + 1]) {
            i += 1;
            continue;
        }
        let header = split_cells(lines[i]);
        let sep = split_cells(lines[i + 1]);
        if !is_separator(&sep) || sep.len() != header.len() {
            i += 1;
            continue;
        }
        let mut end = i + 2;
        while end < lines.len() && is_table_line(lines[end]) {
            end += 1;
        }
        if header.len() == 4 {
            return Ok(parse_rows(&lines[i + 2..end]));
        }
        i = end;
    }
    Err(PromptError::NoTableFound)
}

fn parse_rows(rows: &[&str]) -> ParsedTable {
    let mut out = ParsedTable::default();
    let mut row_no = 0;
    for line in rows {
        let mut cells = split_cells(line);
        if is_separator(&cells) {
            continue;
        }
        row_no += 1;
        match cells.len() {
            4 => {}
            3 => {
                cells.push(String::new());
                out.notices.push(RowNotice {
                    row: row_no,
                    kind: NoticeKind::RowRecovered,
                    reason: "3 cells; comments left empty".into(),
                });
            }
            n => {
                out.notices.push(RowNotice {
                    row: row_no,
                    kind: NoticeKind::RowDropped,
                    reason: format!("{n} cells"),
                });
                continue;
            }
        }
        let mut cells = cells.into_iter();
        let mut next = || cells.next().unwrap_or_default();
        let case = TestCaseDesign::new(next(), next(), next(), next());
        if !case.is_field_complete() {
            out.notices.push(RowNotice {
                row: row_no,
                kind: NoticeKind::RowDropped,
                reason: "empty condition, input or expected output".into(),
            });
            continue;
        }
        out.cases.push(case);
    }
    out
}

fn escape_cell(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\|"),
            '\n' | '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Emits a GitHub-style pipe table with the standard headers.
///
/// Line breaks inside fields become spaces; other text round-trips through
/// [`parse_test_case_table`] unchanged when fields carry no surrounding
/// whitespace.
pub fn render_table(cases: &[TestCaseDesign]) -> String {
    let mut out = format!("| {} |\n", TABLE_HEADERS.join(" | "));
    out.push_str("| --- | --- | --- | --- |\n");
    for case in cases {
        let cells = [
            &case.condition,
            &case.input_action,
            &case.expected_output,
            &case.comments,
        ];
        let cells: Vec<String> = cells.iter().map(|c| escape_cell(c)).collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_separator_only() {
        let t = "| a | b | c | d |\n|---|---|---|---|\n";
        assert_eq!(parse_test_case_table(t).unwrap(), ParsedTable::default());
    }

    #[test]
    fn no_table() {
        assert_eq!(
            parse_test_case_table("Sure! Here you go."),
            Err(PromptError::NoTableFound)
        );
        assert_eq!(parse_test_case_table(""), Err(PromptError::NoTableFound));
    }

    #[test]
    fn three_cell_row_is_padded() {
        let t = "| a | b | c | d |\n|---|---|---|---|\n| x | y | z |\n";
        let p = parse_test_case_table(t).unwrap();
        assert_eq!(p.cases, vec![TestCaseDesign::new("x", "y", "z", "")]);
        assert_eq!(p.notices[0].kind, NoticeKind::RowRecovered);
        assert_eq!(p.notices[0].row, 1);
    }

    #[test]
    fn bad_rows_are_dropped_with_notice() {
        let t = "|a|b|c|d|\n|:--|:-:|--:|---|\n| 1 | 2 |\n| 1 | 2 | 3 | 4 | 5 |\n|  | in | out | c |\n| ok | in | out | c |\n";
        let p = parse_test_case_table(t).unwrap();
        assert_eq!(p.cases.len(), 1);
        assert_eq!(p.cases[0].condition, "ok");
        let kinds: Vec<_> = p.notices.iter().map(|n| (n.row, n.kind)).collect();
        assert_eq!(
            kinds,
            [
                (1, NoticeKind::RowDropped),
                (2, NoticeKind::RowDropped),
                (3, NoticeKind::RowDropped)
            ]
        );
    }

    #[test]
    fn only_first_four_column_table_is_read() {
        let t = "Intro\n\n| k | v |\n|---|---|\n| 1 | 2 |\n\nText\n\n| a | b | c | d |\n| - | - | - | - |\n| first | i | o | |\n\nMore\n\n| a | b | c | d |\n| - | - | - | - |\n| second | i | o | |\n";
        let p = parse_test_case_table(t).unwrap();
        assert_eq!(p.cases.len(), 1);
        assert_eq!(p.cases[0].condition, "first");
    }

    #[test]
    fn tables_without_outer_pipes() {
        let t = "a | b | c | d\n--- | --- | --- | ---\nx | y | z | w\n";
        let p = parse_test_case_table(t).unwrap();
        assert_eq!(p.cases, vec![TestCaseDesign::new("x", "y", "z", "w")]);
    }

    #[test]
    fn escaped_pipes_round_trip() {
        let case = TestCaseDesign::new("a|b", "c\\d", "e\\|f", "trailing\\");
        let p = parse_test_case_table(&render_table(std::slice::from_ref(&case))).unwrap();
        assert_eq!(p.cases, vec![case]);
        assert!(p.notices.is_empty());
    }
}
