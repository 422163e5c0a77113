//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Reference figures are read from paper.md at the workspace root
//! and cross-checked against the pinned targets below.

mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use specforge_core::llm::{Cassette, Gateway, ProviderConfig};
use specforge_core::prompt::{parse_test_case_table, render_table};
use specforge_core::redundancy::align_redundancies;
use specforge_core::review::{
    aggregate_metrics, compare_approaches, ApproachRun, CategoryCounts, ProjectMetrics,
};
use specforge_core::suite::{
    fixpoint_generate, similarity, union_merge, Approach, EquivalenceConfig, FixpointConfig,
    SuiteUnion,
};
use specforge_core::synth::{demo, twelve};
use specforge_core::{parse_srs, TestCaseDesign};
use support::{brute_force_classes, partition_fixture, random_alignment_fixture, random_suite};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const METRICS_AVERAGE: [f64; 5] = [72.492, 15.184, 9.676, 2.648, 2.2];
const AVERAGE_TOL: f64 = 1e-9;
const COMPARISON_SINGLE: f64 = 3.6;
const COMPARISON_CHAIN_REPORTED: f64 = 10.58;
const COMPARISON_CHAIN_TOL: f64 = 0.05;
const ALIGNMENT_PARTITION: [f64; 3] = [47.19, 22.65, 30.16];
const FLAGGED_FRACTIONS: [f64; 2] = [12.82, 8.3];
const PARTITION_SUM_TOL: f64 = 1e-9;
const RANDOM_ALIGNMENT_FIXTURES: u64 = 500;
const DEDUP_SUITES: u64 = 1000;
const DEDUP_MAX_CASES: usize = 200;
const FAST_LIMIT: Duration = Duration::from_secs(1);
const DEDUP_LIMIT: Duration = Duration::from_secs(30);

fn ensure(cond: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---- paper.md extraction ----

fn reference() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../paper.md");
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

/// Cells of a LaTeX tabular row with `\textbf{..}` unwrapped.
fn latex_cells(line: &str) -> Vec<String> {
    let body = line.trim().trim_end_matches("\\\\").trim();
    body.split(" & ")
        .map(|c| {
            c.trim()
                .trim_start_matches("\\textbf{")
                .trim_end_matches('}')
                .trim()
                .to_string()
        })
        .collect()
}

/// Numeric cells of the first row labelled `label` with exactly `n` values.
fn reference_row(text: &str, label: &str, n: usize) -> Result<Vec<f64>, String> {
    text.lines()
        .map(latex_cells)
        .filter(|cells| cells.len() == n + 1 && cells[0] == label)
        .find_map(|cells| {
            cells[1..]
                .iter()
                .map(|c| c.parse::<f64>().ok())
                .collect::<Option<Vec<f64>>>()
        })
        .ok_or_else(|| format!("paper.md has no {n}-value row labelled {label:?}"))
}

const PROJECTS: [&str; 5] = [
    "SMP Portal",
    "Medical Leave Portal",
    "Student Clubs Portal",
    "Ph.D. Portal",
    "Changemaking Website",
];

/// True when one line's integers contain `seq` as a contiguous run.
fn has_number_sequence(text: &str, seq: &[u64]) -> bool {
    text.lines().any(|line| {
        let nums: Vec<u64> = line
            .split(|c: char| !c.is_ascii_digit())
            .filter(|t| !t.is_empty())
            .filter_map(|t| t.parse().ok())
            .collect();
        nums.windows(seq.len()).any(|w| w == seq)
    })
}

fn reference_mentions(text: &str, value: f64) -> bool {
    text.contains(&format!("{value}"))
}

// ---- criteria ----

fn metrics_average_row() -> Outcome {
    let text = reference();
    let average = reference_row(&text, "AVERAGE", 5)?;
    ensure(average == METRICS_AVERAGE, || {
        format!("reference AVERAGE row {average:?} differs from pinned target")
    })?;

    let start = Instant::now();
    let mut rows = Vec::new();
    for name in PROJECTS {
        let r = reference_row(&text, name, 5)?;
        // Verdict counts out of 10,000 realize each published row exactly.
        let count = |pct: f64| (pct * 100.0).round() as usize;
        let counts = CategoryCounts {
            valid_implemented: count(r[0]),
            not_implemented_but_valid: count(r[1]),
            not_applicable: count(r[2]),
            redundant: count(r[3]),
        };
        ensure(counts.total() == 10_000, || {
            format!("{name}: counts {counts:?} do not total 10000")
        })?;
        rows.push(
            ProjectMetrics::from_counts(name, counts, 0, r[4] as usize)
                .map_err(|e| e.to_string())?,
        );
    }
    let avg = aggregate_metrics(&rows).map_err(|e| e.to_string())?.average;
    let elapsed = start.elapsed();
    let got = [
        avg.pct_valid_implemented,
        avg.pct_not_impl_valid,
        avg.pct_not_applicable,
        avg.pct_redundant,
        avg.missed_count,
    ];
    for (g, want) in got.iter().zip(METRICS_AVERAGE) {
        ensure(close(*g, want, AVERAGE_TOL), || {
            format!("average {got:?} vs {METRICS_AVERAGE:?}")
        })?;
    }
    ensure(elapsed < FAST_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{got:?} tol {AVERAGE_TOL:e}, {elapsed:?}"))
}

fn approach_comparison_average() -> Outcome {
    let text = reference();
    let average = reference_row(&text, "AVERAGE", 2)?;
    ensure(
        average == [COMPARISON_SINGLE, COMPARISON_CHAIN_REPORTED],
        || format!("reference AVERAGE row {average:?}"),
    )?;

    let start = Instant::now();
    let mut runs = Vec::new();
    for name in PROJECTS {
        let r = reference_row(&text, name, 2)?;
        // Ten use cases per project turn each per-use-case average into a whole count.
        for (approach, avg) in [(Approach::Single, r[0]), (Approach::Chain, r[1])] {
            runs.push(ApproachRun {
                project: name.to_string(),
                approach,
                canonical_count: (avg * 10.0).round() as usize,
                use_case_count: 10,
            });
        }
    }
    let table = compare_approaches(&runs).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let single = table.average[&Approach::Single];
    let chain = table.average[&Approach::Chain];
    ensure(close(single, COMPARISON_SINGLE, AVERAGE_TOL), || {
        format!("single average {single}")
    })?;
    ensure(close(chain, 10.6, AVERAGE_TOL), || {
        format!("chain average {chain}")
    })?;
    ensure(
        close(chain, COMPARISON_CHAIN_REPORTED, COMPARISON_CHAIN_TOL),
        || format!("chain average {chain}"),
    )?;
    ensure(elapsed < FAST_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("single {single}, chain {chain} (reported {COMPARISON_CHAIN_REPORTED} ± {COMPARISON_CHAIN_TOL}), {elapsed:?}"))
}

fn flatten(attempt: Vec<Vec<TestCaseDesign>>) -> Vec<TestCaseDesign> {
    attempt.into_iter().flatten().collect()
}

fn union_example() -> Outcome {
    let text = reference();
    ensure(has_number_sequence(&text, &[5, 7, 4, 8]), || {
        "paper.md lacks the 5/7/4/8 union example".into()
    })?;
    let mut attempts = demo::attempts().into_iter().map(flatten);
    let (first, second) = (attempts.next().unwrap(), attempts.next().unwrap());
    ensure(first.len() == 5 && second.len() == 7, || {
        "demo batches are not 5 and 7 rows".into()
    })?;
    let cfg = EquivalenceConfig::default();
    let (suite5, added) = union_merge(SuiteUnion::new(cfg), first.clone(), &cfg);
    ensure(suite5.len() == 5 && added == 5, || {
        format!("first batch gave {}", suite5.len())
    })?;
    let overlapping = second
        .iter()
        .filter(|c| first.iter().any(|f| similarity(f, c) >= cfg.threshold))
        .count();
    ensure(overlapping == 4, || {
        format!("{overlapping} overlapping rows")
    })?;
    let (suite8, added) = union_merge(suite5, second, &cfg);
    ensure(suite8.len() == 8 && added == 3, || {
        format!("size {} added {added}", suite8.len())
    })?;

    let path = common::fixtures().join("demo/generate-chain.cassette.json");
    let gateway = Gateway::replay(
        ProviderConfig::default(),
        Cassette::load(&path).map_err(|e| e.to_string())?,
    );
    let doc = parse_srs(demo::SRS, "demo").map_err(|e| e.to_string())?;
    let suite = fixpoint_generate(&doc, &gateway, &FixpointConfig::default(), &mut |_| Ok(()))
        .map_err(|e| e.to_string())?;
    ensure(
        suite.growth_history == [5, 3, 0] && suite.fixpoint_reached,
        || {
            format!(
                "growth {:?} fixpoint {}",
                suite.growth_history, suite.fixpoint_reached
            )
        },
    )?;
    Ok("size 8, added 3; replayed growth [5, 3, 0], fixpoint reached".into())
}

fn redundancy_alignment_partition() -> Outcome {
    let text = reference();
    for v in ALIGNMENT_PARTITION.iter().chain(&FLAGGED_FRACTIONS) {
        ensure(reference_mentions(&text, *v), || {
            format!("paper.md does not mention {v}")
        })?;
    }
    let (llm, dev) = partition_fixture(4719, 2265, 3016, 0, 10_000);
    let r = align_redundancies(&llm, &dev, 10_000).map_err(|e| e.to_string())?;
    let got = [r.overlap_pct, r.new_valid_pct, r.false_positive_pct];
    for (g, want) in got.iter().zip(ALIGNMENT_PARTITION) {
        ensure(close(*g, want, AVERAGE_TOL), || {
            format!("partition {got:?}")
        })?;
    }
    for seed in 0..RANDOM_ALIGNMENT_FIXTURES {
        let (llm, dev, total) = random_alignment_fixture(seed);
        let r = align_redundancies(&llm, &dev, total).map_err(|e| format!("seed {seed}: {e}"))?;
        let sum = r.overlap_pct + r.new_valid_pct + r.false_positive_pct;
        ensure(close(sum, 100.0, PARTITION_SUM_TOL), || {
            format!("seed {seed}: sum {sum}")
        })?;
    }
    // 5 of 39 cases and 83 of 1000 cases.
    let (llm, dev) = partition_fixture(0, 5, 0, 0, 39);
    let llm_fraction = align_redundancies(&llm, &dev, 39)
        .map_err(|e| e.to_string())?
        .llm_flagged_fraction;
    let (llm, dev) = partition_fixture(0, 2, 0, 83, 1000);
    let dev_fraction = align_redundancies(&llm, &dev, 1000)
        .map_err(|e| e.to_string())?
        .dev_flagged_fraction;
    let rounded = specforge_core::review::round_half_up(llm_fraction, 2);
    ensure(rounded == FLAGGED_FRACTIONS[0], || {
        format!("llm fraction {llm_fraction}")
    })?;
    ensure(
        close(dev_fraction, FLAGGED_FRACTIONS[1], AVERAGE_TOL),
        || format!("dev fraction {dev_fraction}"),
    )?;
    Ok(format!("{got:?}; {RANDOM_ALIGNMENT_FIXTURES} random sums within {PARTITION_SUM_TOL:e}; fractions {rounded}, {dev_fraction}"))
}

/// The example test case table, converted from LaTeX rows to a pipe table.
fn reference_example_table(text: &str) -> Result<String, String> {
    let start = text
        .find("Functionality/ Condition to be Tested")
        .ok_or("example table not found")?;
    let end = start
        + text[start..]
            .find("\\end{tabular}")
            .ok_or("example table not terminated")?;
    let rows: Vec<Vec<String>> = text[start..end]
        .lines()
        .map(latex_cells)
        .filter(|c| c.len() == 4)
        .collect();
    ensure(rows.len() == 4, || {
        format!("expected header plus 3 rows, found {}", rows.len())
    })?;
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    let mut table = line(&rows[0]);
    table.push_str("|---|---|---|---|\n");
    for r in &rows[1..] {
        table.push_str(&line(r));
    }
    Ok(table)
}

fn example_table_round_trip() -> Outcome {
    let table = reference_example_table(&reference())?;
    let parsed = parse_test_case_table(&table).map_err(|e| e.to_string())?;
    ensure(parsed.cases.len() == 3 && parsed.notices.is_empty(), || {
        format!("parsed {:?}", parsed)
    })?;
    let first = &parsed.cases[0].condition;
    ensure(first == "User can log in with valid credentials", || {
        format!("first condition {first:?}")
    })?;
    let emitted = render_table(&parsed.cases);
    let again = parse_test_case_table(&emitted).map_err(|e| e.to_string())?;
    ensure(again.cases == parsed.cases, || {
        "re-parsed rows differ".into()
    })?;
    ensure(render_table(&again.cases) == emitted, || {
        "second rendering differs".into()
    })?;
    Ok(format!("3 rows, first condition {first:?}"))
}

fn dedup_oracle() -> Outcome {
    let start = Instant::now();
    let mut total_cases = 0;
    for seed in 0..DEDUP_SUITES {
        let cases: Vec<TestCaseDesign> = random_suite(seed, DEDUP_MAX_CASES)
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.with_provenance(1, i))
            .collect();
        total_cases += cases.len();
        let mut suite = SuiteUnion::new(EquivalenceConfig::default());
        suite.merge(cases.clone());
        let greedy: Vec<Vec<usize>> = suite
            .cases()
            .iter()
            .map(|c| c.provenance.iter().map(|p| p.row).collect())
            .collect();
        let oracle = brute_force_classes(&cases, EquivalenceConfig::default().threshold);
        ensure(greedy == oracle, || format!("seed {seed}: classes differ"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < DEDUP_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{DEDUP_SUITES} suites, {total_cases} cases, {elapsed:?}"
    ))
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e
                .path()
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn replay_determinism() -> Outcome {
    let (a, b) = (
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    );
    let (pa, pb) = (a.path().join("demo"), b.path().join("demo"));
    let out_a = common::demo_pipeline(&pa);
    let out_b = common::demo_pipeline(&pb);
    ensure(out_a == out_b, || "stdout differs between runs".into())?;
    let (ta, tb) = (tree(&pa), tree(&pb));
    ensure(ta.keys().eq(tb.keys()), || "file lists differ".into())?;
    for (name, bytes) in &ta {
        ensure(tb[name] == *bytes, || format!("{name} differs"))?;
    }
    Ok(format!(
        "{} files and {} bytes of stdout identical",
        ta.len(),
        out_a.len()
    ))
}

fn prompt_counts() -> Outcome {
    let doc = parse_srs(&twelve::srs(), "twelve").map_err(|e| e.to_string())?;
    ensure(doc.use_cases.len() == twelve::USE_CASES, || {
        "fixture size".into()
    })?;
    let sends = |file: &str, approach: Approach| -> Result<usize, String> {
        let cassette = Cassette::load(&common::fixtures().join(file)).map_err(|e| e.to_string())?;
        let gateway = Gateway::replay(ProviderConfig::default(), cassette);
        let cfg = FixpointConfig {
            approach,
            max_attempts: 1,
            ..Default::default()
        };
        fixpoint_generate(&doc, &gateway, &cfg, &mut |_| Ok(())).map_err(|e| e.to_string())?;
        Ok(gateway.send_count())
    };
    let chain = sends("twelve/generate-chain.cassette.json", Approach::Chain)?;
    let single = sends("twelve/generate-single.cassette.json", Approach::Single)?;
    ensure(chain == 13, || format!("chain sends {chain}"))?;
    ensure(single == 1, || format!("single sends {single}"))?;
    Ok(format!("chain {chain} sends per attempt, single {single}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("metrics-average-row", metrics_average_row),
        ("approach-comparison-average", approach_comparison_average),
        ("union-example-and-fixpoint", union_example),
        (
            "redundancy-alignment-partition",
            redundancy_alignment_partition,
        ),
        ("example-table-round-trip", example_table_round_trip),
        ("dedup-oracle", dedup_oracle),
        ("replay-determinism", replay_determinism),
        ("prompt-count-contract", prompt_counts),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
