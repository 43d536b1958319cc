//! Dataset files: a hand-written fixture, byte-stable rewrites and the
//! header checks.

use std::path::Path;

use flagsel::dataset::{audit, read_dataset, read_dataset_from, write_dataset, write_dataset_to, DatasetRecord};
use flagsel::manifest::{Benchmark, BenchmarkEntry};
use flagsel::runner::MockRunner;
use flagsel::campaign::{run_campaign, CampaignOptions};
use flagsel::Error;
use flagsel_core::{FeatureVector, Fuzz, Solver, Strategy, TaskType, Unwind, Verdict};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn hand_written_fixture_reads_and_rewrites_byte_identically() {
    let path = fixture("three_lines.jsonl");
    let records = read_dataset(&path).unwrap();
    assert_eq!(records.len(), 2);

    let a = &records[0];
    assert_eq!(a.benchmark_id, "loop");
    assert_eq!(a.task, TaskType::CoverError);
    assert_eq!(a.flags.strategy, Strategy::KInduction);
    assert_eq!(a.flags.solver, Solver::Z3);
    assert_eq!(a.flags.k_step, 2);
    assert_eq!(a.flags.unwind, Unwind::Unlimited);
    assert_eq!(a.flags.fuzz, Fuzz::On(83));
    assert_eq!(a.verdict, Some(Verdict::BugDetected));
    assert_eq!(a.features.while_infinite_count, 1);
    assert!(a.features.has_nondet_in_loop);
    // 240 of 300 seconds left is exactly the top threshold
    assert_eq!(a.class.value(), 0);

    let b = &records[1];
    assert_eq!(b.task, TaskType::CoverBranches);
    assert_eq!(b.coverage_score, Some(0.5));
    assert_eq!(b.features.if_depth_avg, 1.5);
    assert_eq!(b.class.value(), 3);
    assert_eq!(b.note.as_deref(), Some("backend exited early"));

    assert!(audit(&records).is_empty());
    let mut out = Vec::new();
    write_dataset_to(&mut out, &records).unwrap();
    assert_eq!(out, std::fs::read(&path).unwrap());
}

#[test]
fn audit_flags_a_stored_class_that_disagrees() {
    let records = read_dataset(&fixture("bad_class.jsonl")).unwrap();
    let findings = audit(&records);
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0].index, 1);
    assert_eq!(findings[0].stored.value(), 1);
    assert_eq!(findings[0].recomputed.map(|c| c.value()), Some(3));
}

fn campaign_records() -> Vec<DatasetRecord> {
    let bench = |id: &str, f: FeatureVector, task| Benchmark {
        entry: BenchmarkEntry { id: id.into(), path: "unused.c".into(), task, time_limit_seconds: 300.0 },
        features: f,
    };
    let loopy = FeatureVector {
        for_count: 2,
        for_max_depth: 2,
        for_depth_avg: 1.5,
        nondet_call_count: 1,
        nondet_call_depth_avg: 2.0,
        has_nondet_in_loop: true,
        ..Default::default()
    };
    let benches = [bench("a", loopy, TaskType::CoverError), bench("b", loopy, TaskType::CoverBranches)];
    run_campaign(&benches, &MockRunner { seed: 9 }, &CampaignOptions { jobs: 2, ..Default::default() }).unwrap()
}

#[test]
fn campaign_dataset_round_trips_byte_identically() {
    let records = campaign_records();
    assert_eq!(records.len(), 768);
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.jsonl");
    let second = dir.path().join("second.jsonl");
    write_dataset(&first, &records).unwrap();
    let back = read_dataset(&first).unwrap();
    assert_eq!(back, records);
    write_dataset(&second, &back).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(std::fs::read_to_string(&first).unwrap().lines().count(), 769);
}

#[test]
fn empty_dataset_is_an_empty_file() {
    let mut out = Vec::new();
    write_dataset_to(&mut out, &[]).unwrap();
    assert!(out.is_empty());
    assert!(read_dataset_from(&b""[..]).unwrap().is_empty());
}

#[test]
fn header_problems_are_reported_before_records() {
    let text = std::fs::read_to_string(fixture("three_lines.jsonl")).unwrap();
    let future = text.replacen("\"schema_version\":1", "\"schema_version\":2", 1);
    match read_dataset_from(future.as_bytes()) {
        Err(Error::SchemaVersion { found: 2, expected: 1, .. }) => {}
        other => panic!("{other:?}"),
    }
    let reordered = text.replacen("\"for_count\",\"for_max_depth\"", "\"for_max_depth\",\"for_count\"", 1);
    assert!(read_dataset_from(reordered.as_bytes()).is_err());
    let broken = text.replacen("\"class\":3", "\"class\":9", 1);
    match read_dataset_from(broken.as_bytes()) {
        Err(Error::DatasetLine { line: 3, .. }) => {}
        other => panic!("{other:?}"),
    }
}
