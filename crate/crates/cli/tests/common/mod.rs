//! Drives the CLI in-process over the shipped demo fixtures.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("specforge").chain(args.iter().copied());
    let code = specforge_cli::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> String {
    fixtures().join(rel).to_str().unwrap().to_string()
}

fn ok(args: &[&str], transcript: &mut String) {
    let o = cli(args);
    assert_eq!(o.code, 0, "{args:?} failed: {}", o.stderr);
    transcript.push_str(&o.stdout);
}

/// Runs every stage of the demo pipeline against a project at `project`
/// and returns the concatenated stdout.
pub fn demo_pipeline(project: &Path) -> String {
    let p = project.to_str().unwrap();
    let mut t = String::new();
    ok(&["init", "--project", p], &mut t);
    ok(&["ingest", &fixture("demo/srs.md"), "--project", p], &mut t);
    ok(
        &[
            "generate",
            "--project",
            p,
            "--replay",
            &fixture("demo/generate-chain.cassette.json"),
        ],
        &mut t,
    );
    ok(
        &[
            "generate",
            "--project",
            p,
            "--approach",
            "single",
            "--replay",
            &fixture("demo/generate-single.cassette.json"),
        ],
        &mut t,
    );
    ok(
        &[
            "redundancy",
            "--project",
            p,
            "--replay",
            &fixture("demo/redundancy.cassette.json"),
        ],
        &mut t,
    );
    ok(
        &[
            "verdicts",
            "import",
            &fixture("demo/review.json"),
            "--project",
            p,
        ],
        &mut t,
    );
    ok(&["metrics", "--project", p], &mut t);
    ok(&["metrics", "--project", p, "--format", "csv"], &mut t);
    ok(&["compare", "--project", p], &mut t);
    ok(&["alignment", "--project", p], &mut t);
    ok(&["export", "--project", p], &mut t);
    t
}
