//! Workloads shared by the criterion benches.

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use specforge_core::TestCaseDesign;

const VOCAB: [&str; 24] = [
    "user",
    "admin",
    "login",
    "logout",
    "password",
    "reset",
    "email",
    "form",
    "submit",
    "upload",
    "report",
    "approve",
    "reject",
    "request",
    "leave",
    "club",
    "event",
    "portal",
    "dashboard",
    "error",
    "saved",
    "shown",
    "valid",
    "invalid",
];

fn phrase(rng: &mut StdRng, words: usize) -> String {
    (0..words)
        .map(|_| *VOCAB.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// `n` model rows where roughly `dup_rate` of them restate an earlier row
/// with one extra word.
pub fn generated_rows(seed: u64, n: usize, dup_rate: f64) -> Vec<TestCaseDesign> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut rows: Vec<TestCaseDesign> = Vec::with_capacity(n);
    for _ in 0..n {
        let row = if !rows.is_empty() && rng.random_bool(dup_rate) {
            let mut copy = rows.choose(&mut rng).unwrap().clone();
            copy.expected_output.push(' ');
            copy.expected_output
                .push_str(VOCAB.choose(&mut rng).unwrap());
            copy
        } else {
            let (c, i, e) = (
                rng.random_range(4..9),
                rng.random_range(4..9),
                rng.random_range(3..7),
            );
            TestCaseDesign::new(
                phrase(&mut rng, c),
                phrase(&mut rng, i),
                phrase(&mut rng, e),
                phrase(&mut rng, 5),
            )
        };
        rows.push(row);
    }
    rows
}

/// Splits `rows` into `attempts` batches of similar size.
pub fn batches(rows: Vec<TestCaseDesign>, attempts: usize) -> Vec<Vec<TestCaseDesign>> {
    let size = rows.len().div_ceil(attempts.max(1)).max(1);
    rows.chunks(size).map(<[_]>::to_vec).collect()
}
