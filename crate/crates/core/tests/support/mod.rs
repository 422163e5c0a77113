//! Independent reference implementations and random fixture builders shared
//! by the integration tests and the acceptance target.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use specforge_core::redundancy::{RedundancyFlag, ValidationVerdict};
use specforge_core::TestCaseDesign;

/// Tokens of one text: lowercase the whole string, then cut at every
/// character that is not a letter or digit.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

pub fn oracle_token_set(case: &TestCaseDesign) -> HashSet<String> {
    [&case.condition, &case.input_action, &case.expected_output]
        .iter()
        .flat_map(|f| oracle_tokens(f))
        .collect()
}

pub fn oracle_jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Sequential O(n^2) greedy union: each case joins the first earlier
/// representative it is similar enough to, else founds a new class.
/// Returns the input indices of each class, classes in founding order.
pub fn brute_force_classes(cases: &[TestCaseDesign], threshold: f64) -> Vec<Vec<usize>> {
    let sets: Vec<HashSet<String>> = cases.iter().map(oracle_token_set).collect();
    let mut reps: Vec<usize> = Vec::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..cases.len() {
        match reps
            .iter()
            .position(|&r| oracle_jaccard(&sets[r], &sets[i]) >= threshold)
        {
            Some(k) => classes[k].push(i),
            None => {
                reps.push(i);
                classes.push(vec![i]);
            }
        }
    }
    classes
}

const WORDS: [&str; 14] = [
    "user", "Login", "password", "valid", "ERROR", "page", "click", "submit", "form", "report",
    "admin", "email", "saved", "shown",
];
const GLUE: [&str; 6] = [" ", ", ", "-", "! ", " / ", "\t"];

fn phrase(rng: &mut StdRng, len: usize) -> String {
    let mut out = String::new();
    for i in 0..len {
        if i > 0 {
            out.push_str(GLUE.choose(rng).unwrap());
        }
        out.push_str(WORDS.choose(rng).unwrap());
    }
    out
}

fn random_case(rng: &mut StdRng) -> TestCaseDesign {
    let (a, b, c) = (
        rng.random_range(1..4),
        rng.random_range(1..4),
        rng.random_range(1..4),
    );
    TestCaseDesign::new(
        phrase(rng, a),
        phrase(rng, b),
        phrase(rng, c),
        phrase(rng, 1),
    )
}

/// Lightly perturbs one field of `case` so it often stays near-duplicate.
fn perturb(rng: &mut StdRng, case: &TestCaseDesign) -> TestCaseDesign {
    let mut out = case.clone();
    let extra = WORDS.choose(rng).unwrap();
    match rng.random_range(0..4) {
        0 => out.condition = format!("{} {extra}", out.condition),
        1 => out.input_action = format!("{extra} {}", out.input_action),
        2 => out.expected_output = out.expected_output.to_uppercase(),
        _ => out.comments = phrase(rng, 2),
    }
    out
}

/// A random list of up to `max_len` cases mixing fresh rows and
/// near-copies of earlier rows, with tiny vocabularies so that similarity
/// values around the threshold are common.
pub fn random_suite(seed: u64, max_len: usize) -> Vec<TestCaseDesign> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(0..=max_len);
    let mut cases: Vec<TestCaseDesign> = Vec::with_capacity(n);
    for _ in 0..n {
        let case = if !cases.is_empty() && rng.random_bool(0.4) {
            let base = cases.choose(&mut rng).unwrap().clone();
            perturb(&mut rng, &base)
        } else {
            random_case(&mut rng)
        };
        cases.push(case);
    }
    cases
}

/// Canonical ids `TC-1..=TC-n`.
pub fn ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("TC-{i}")).collect()
}

/// Random flags over `total` cases where every LLM flag carries a verdict.
pub fn random_alignment_fixture(seed: u64) -> (Vec<RedundancyFlag>, Vec<RedundancyFlag>, usize) {
    let mut rng = StdRng::seed_from_u64(seed);
    let total = rng.random_range(2..60);
    let all = ids(total);
    let group = |rng: &mut StdRng| -> Vec<String> {
        let k = rng.random_range(2..=total.min(5));
        all.choose_multiple(rng, k).cloned().collect()
    };
    let llm: Vec<RedundancyFlag> = (0..rng.random_range(1..8))
        .map(|i| {
            let mut f = RedundancyFlag::llm(format!("RF-{}", i + 1), group(&mut rng), "");
            let verdict = if rng.random_bool(0.5) {
                ValidationVerdict::Confirmed
            } else {
                ValidationVerdict::FalsePositive
            };
            f.validation = verdict.into();
            f
        })
        .collect();
    let dev: Vec<RedundancyFlag> = (0..rng.random_range(0..5))
        .map(|i| RedundancyFlag::developer(format!("DF-{}", i + 1), group(&mut rng), ""))
        .collect();
    (llm, dev, total)
}

/// Flags realizing an alignment partition exactly: `overlap` model-flagged
/// cases also flagged by developers, `confirmed` and `rejected` model-only
/// cases, plus `dev_only` developer-only cases, over `total` cases.
pub fn partition_fixture(
    overlap: usize,
    confirmed: usize,
    rejected: usize,
    dev_only: usize,
    total: usize,
) -> (Vec<RedundancyFlag>, Vec<RedundancyFlag>) {
    assert!(overlap + confirmed + rejected + dev_only <= total);
    let all = ids(total);
    let mut next = 0;
    let mut take = |n: usize| {
        let out = all[next..next + n].to_vec();
        next += n;
        out
    };
    let (o, c, r, d) = (
        take(overlap),
        take(confirmed),
        take(rejected),
        take(dev_only),
    );
    let mut llm = Vec::new();
    let mut dev = Vec::new();
    if !o.is_empty() {
        llm.push(RedundancyFlag::llm("RF-1", o.clone(), ""));
        dev.push(RedundancyFlag::developer("DF-1", o, ""));
    }
    if !c.is_empty() {
        let mut f = RedundancyFlag::llm("RF-2", c, "");
        f.validation = ValidationVerdict::Confirmed.into();
        llm.push(f);
    }
    if !r.is_empty() {
        let mut f = RedundancyFlag::llm("RF-3", r, "");
        f.validation = ValidationVerdict::FalsePositive.into();
        llm.push(f);
    }
    if !d.is_empty() {
        dev.push(RedundancyFlag::developer("DF-2", d, ""));
    }
    (llm, dev)
}
