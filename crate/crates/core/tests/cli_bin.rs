//! End-to-end checks of the `wfp` binary: subcommands, flags, exit codes,
//! and file output.

mod common;

use std::fs;
use std::process::{Command, Output};

use common::fixture_path;

fn wfp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture_arg(name: &str) -> String {
    fixture_path(name).to_str().unwrap().to_owned()
}

#[test]
fn validate_prints_summary_line() {
    let out = wfp(&["validate", &fixture_arg("sequence.wfp")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "OK: process sequence, 5 nodes, 4 edges\n"
    );
}

#[test]
fn validate_rejects_broken_files_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.wfp");
    fs::write(&path, "process P { start s; end e; task A; s -> A; }").unwrap();
    let out = wfp(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ARITY"), "stderr: {stderr}");
}

#[test]
fn missing_file_is_exit_three() {
    let out = wfp(&["validate", "/no/such/file.wfp"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_writes_jsonl_to_the_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("case.jsonl");
    let out = wfp(&[
        "run",
        &fixture_arg("sequence.wfp"),
        "--seed",
        "5",
        "--out",
        log_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = fs::read_to_string(&log_path).unwrap();
    assert!(written.starts_with(r#"{"case":"c1","seq":0,"kind":"case_started"}"#));

    let direct = wfp(&["run", &fixture_arg("sequence.wfp"), "--seed", "5"]);
    assert_eq!(String::from_utf8_lossy(&direct.stdout), written);
}

#[test]
fn run_exit_codes_for_mismatch_nets() {
    let out = wfp(&["run", &fixture_arg("mismatch_deadlock.wfp")]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stdout).contains("case_deadlocked"));

    let out = wfp(&["run", &fixture_arg("mismatch_improper.wfp")]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn run_with_script_drives_the_loop_twice() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("rounds.txt");
    fs::write(&script, "x again\nx done\n").unwrap();
    let out = wfp(&[
        "run",
        &fixture_arg("discriminator_loop.wfp"),
        "--script",
        script.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let fired_d = stdout
        .lines()
        .filter(|l| l.contains(r#""kind":"gateway_fired","node":"d""#))
        .count();
    assert_eq!(fired_d, 2, "log:\n{stdout}");
}

#[test]
fn seed_and_script_flags_conflict() {
    let out = wfp(&[
        "run",
        &fixture_arg("sequence.wfp"),
        "--seed",
        "1",
        "--script",
        "anything.txt",
    ]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn step_limit_exhaustion_is_exit_six() {
    let out = wfp(&["run", &fixture_arg("sequence.wfp"), "--step-limit", "1"]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).contains("STEP_LIMIT"));
}

#[test]
fn or_join_bound_exhaustion_is_exit_six() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("both.txt");
    fs::write(&script, "O a,b\n").unwrap();
    let out = wfp(&[
        "run",
        &fixture_arg("sync_merge.wfp"),
        "--script",
        script.to_str().unwrap(),
        "--or-join-bound",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ORJOIN_BOUND"));
}

#[test]
fn explore_reports_counts_and_soundness() {
    let out = wfp(&["explore", &fixture_arg("parallel_split.wfp")]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("explore emits JSON");
    assert_eq!(json["states"], 6);
    assert_eq!(json["transitions"], 6);
    assert_eq!(json["traces"], 2);
    assert_eq!(json["soundness"]["sound"], true);
    assert_eq!(json["soundness"]["dead_nodes"].as_array().unwrap().len(), 0);

    let out = wfp(&["explore", &fixture_arg("mismatch_improper.wfp")]);
    assert_eq!(out.status.code(), Some(4));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["soundness"]["sound"], false);
    assert!(!json["soundness"]["improper_completion_states"]
        .as_array()
        .unwrap()
        .is_empty());

    let out = wfp(&["explore", &fixture_arg("mismatch_deadlock.wfp")]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn explore_truncation_is_exit_six() {
    let out = wfp(&["explore", &fixture_arg("synchronization.wfp"), "--max-states", "3"]);
    assert_eq!(out.status.code(), Some(6));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["soundness"]["truncated"], true);
}

#[test]
fn dot_outputs_match_the_fixture_structure() {
    let out = wfp(&["dot", &fixture_arg("sequence.wfp")]);
    assert_eq!(out.status.code(), Some(0));
    let dot = String::from_utf8_lossy(&out.stdout);
    assert_eq!(dot.lines().filter(|l| l.contains("[shape=")).count(), 5);

    let out = wfp(&["dot", &fixture_arg("multi_choice.wfp")]);
    let dot = String::from_utf8_lossy(&out.stdout);
    assert!(dot.contains("OR-split"));
    assert!(dot.contains("OR-join"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.wfp");
    fs::write(&path, "process P { start ; }").unwrap();
    let out = wfp(&["dot", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_invocations_are_byte_identical() {
    for name in ["exclusive_choice.wfp", "multi_choice.wfp", "n_of_m_loop.wfp"] {
        let args = ["run", &fixture_arg(name), "--seed", "99"];
        let a = wfp(&args);
        let b = wfp(&args);
        assert_eq!(a.stdout, b.stdout, "{name}");
        assert_eq!(a.status.code(), b.status.code(), "{name}");
    }
}
