mod support;

use std::path::PathBuf;
use std::sync::Arc;

use specforge_core::llm::{Cassette, Gateway, ProviderConfig, SessionFactory};
use specforge_core::redundancy::{
    align_redundancies, flag_redundancies, FlagSource, FlagStore, Validation,
};
use specforge_core::review::{format_2dp, round_half_up};
use specforge_core::suite::{fixpoint_generate, FixpointConfig, SuiteUnion};
use specforge_core::synth::{self, demo};
use specforge_core::{parse_srs, SrsDocument};
use support::partition_fixture;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn demo_suite() -> (SrsDocument, SuiteUnion) {
    let doc = parse_srs(demo::SRS, "demo").unwrap();
    let gateway = Gateway::replay(
        ProviderConfig::default(),
        Cassette::load(&fixture("demo/generate-chain.cassette.json")).unwrap(),
    );
    let suite =
        fixpoint_generate(&doc, &gateway, &FixpointConfig::default(), &mut |_| Ok(())).unwrap();
    (doc, suite)
}

#[test]
fn replayed_redundancy_session() {
    let (doc, suite) = demo_suite();
    let gateway = Gateway::replay(
        ProviderConfig::default(),
        Cassette::load(&fixture("demo/redundancy.cassette.json")).unwrap(),
    );
    let mut session = gateway.open_session("redundancy");
    let flags = flag_redundancies(&doc, &suite, &mut session).unwrap();
    assert_eq!(gateway.send_count(), 2);
    let members: Vec<Vec<&str>> = flags
        .iter()
        .map(|f| f.member_ids.iter().map(String::as_str).collect())
        .collect();
    assert_eq!(
        members,
        [
            vec!["TC-2", "TC-3"],
            vec!["TC-5", "TC-8"],
            vec!["TC-4", "TC-7"]
        ]
    );
    assert!(flags
        .iter()
        .all(|f| f.source == FlagSource::Llm && f.validation == Validation::Pending));
    assert_eq!(flags[0].flag_id, "RF-1");
}

#[test]
fn reply_with_unknown_id_is_rejected() {
    let (doc, suite) = demo_suite();
    let transport = synth::redundancy_script("GROUP: TC-1, TC-42 | nope");
    let gateway = Gateway::record(ProviderConfig::default(), Arc::new(transport));
    let err = flag_redundancies(&doc, &suite, &mut gateway.open_session("r")).unwrap_err();
    assert_eq!(err.code(), "UnknownCaseId");
}

#[test]
fn pending_flags_block_alignment() {
    let (doc, suite) = demo_suite();
    let gateway = Gateway::record(
        ProviderConfig::default(),
        Arc::new(synth::redundancy_script(demo::REDUNDANCY_REPLY)),
    );
    let flags = flag_redundancies(&doc, &suite, &mut gateway.open_session("r")).unwrap();
    let mut store = FlagStore::default();
    store.replace_llm_flags(flags);
    store
        .add_developer_flag(vec!["TC-2".into(), "TC-3".into()], "dup", &suite.ids())
        .unwrap();
    let err =
        align_redundancies(&store.llm_flags(), &store.developer_flags(), suite.len()).unwrap_err();
    // TC-2 and TC-3 are developer-confirmed; the other four still need a verdict.
    assert_eq!(err.code(), "UnvalidatedCases");
    assert_eq!(
        err.to_string(),
        "UnvalidatedCases: 4 flagged case(s) still pending validation: TC-4, TC-5, TC-7, TC-8"
    );
}

#[test]
fn derived_partition_fixture() {
    let (llm, dev) = partition_fixture(4719, 2265, 3016, 0, 10000);
    let r = align_redundancies(&llm, &dev, 10000).unwrap();
    assert_eq!(r.llm_flagged_cases, 10000);
    assert!((r.overlap_pct - 47.19).abs() < 1e-9);
    assert!((r.new_valid_pct - 22.65).abs() < 1e-9);
    assert!((r.false_positive_pct - 30.16).abs() < 1e-9);
}

#[test]
fn flagged_fractions() {
    let (llm, dev) = partition_fixture(0, 5, 0, 0, 39);
    let r = align_redundancies(&llm, &dev, 39).unwrap();
    assert_eq!(format_2dp(r.llm_flagged_fraction), "12.82");
    assert_eq!(round_half_up(r.llm_flagged_fraction, 2), 12.82);

    let (llm, dev) = partition_fixture(0, 2, 0, 83, 1000);
    let r = align_redundancies(&llm, &dev, 1000).unwrap();
    assert_eq!(r.dev_flagged_cases, 83);
    assert!((r.dev_flagged_fraction - 8.3).abs() < 1e-9);
}
