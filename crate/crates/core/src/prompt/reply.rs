use std::collections::HashSet;

use super::PromptError;
use crate::redundancy::RedundancyFlag;

fn strip_group_prefix(line: &str) -> Option<&str> {
    let line = line.trim_start();
    let head = line.get(..6)?;
    head.eq_ignore_ascii_case("GROUP:").then(|| &line[6..])
}

/// Parses `GROUP: <id>, <id>[, ...] | <rationale>` lines into pending LLM
/// flags, numbered `RF-1..` in reply order. Other lines are ignored.
pub fn parse_redundancy_response(
    reply: &str,
    known_ids: &[String],
) -> Result<Vec<RedundancyFlag>, PromptError> {
    let known: HashSet<&str> = known_ids.iter().map(String::as_str).collect();
    let mut flags = Vec::new();
    for (n, line) in reply.lines().enumerate() {
        let Some(rest) = strip_group_prefix(line) else {
            continue;
        };
        let (ids, rationale) = rest.split_once('|').unwrap_or((rest, ""));
        let mut members: Vec<String> = Vec::new();
        for id in ids
            .split(',')
            .map(|s| s.trim().trim_matches('`'))
            .filter(|s| !s.is_empty())
        {
            if !known.contains(id) {
                return Err(PromptError::UnknownCaseId(id.to_string()));
            }
            if !members.iter().any(|m| m == id) {
                members.push(id.to_string());
            }
        }
        if members.len() < 2 {
            return Err(PromptError::MalformedGroup { line: n + 1 });
        }
        flags.push(RedundancyFlag::llm(
            format!("RF-{}", flags.len() + 1),
            members,
            rationale.trim(),
        ));
    }
    Ok(flags)
}
