//! End-to-end tests of the `seqeffect` binary: exit codes, report shape,
//! determinism, input validation.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqeffect"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("SEQEFFECT_SEED").output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

fn zero_matrix_json() -> &'static str {
    r#"{"dim": 2, "entries": [[[0,0],[0,0]],[[0,0],[0,0]]]}"#
}

fn plus_state_json() -> &'static str {
    r#"{"dim": 2, "entries": [[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]]}"#
}

fn projective_povm_json() -> &'static str {
    r#"{"dim": 2, "effects": [
        {"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[0,0]]]},
        {"dim": 2, "entries": [[[0,0],[0,0]],[[0,0],[1,0]]]}
    ]}"#
}

#[test]
fn check_standard_passes_with_exit_zero() {
    let out = run(&[
        "check", "--candidate", "standard", "--dims", "2,3", "--trials", "500", "--seed", "42",
        "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["passed"], Value::Bool(true));
    assert_eq!(report["config"]["seed"], 42);
    assert_eq!(report["fuzz"]["theorem_tension"], Value::Bool(false));
    assert!(report.get("timestamp_unix").is_none());
}

#[test]
fn check_jordan_reports_golden_failure_set() {
    let out = run(&[
        "check", "--candidate", "jordan", "--dims", "2", "--trials", "2000", "--seed", "42",
        "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let report = stdout_json(&out);
    assert_eq!(report["passed"], Value::Bool(false));
    let mut failed: Vec<String> = report["fuzz"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["passed"] == Value::Bool(false))
        .map(|r| r["condition"].as_str().unwrap().to_string())
        .collect();
    failed.sort();
    failed.dedup();
    assert_eq!(failed, vec!["CLOSURE", "HALF_ASSOC", "PURITY", "WEAK_ASSOC"]);
    // Witnesses carry the argmax inputs.
    let closure = report["fuzz"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["condition"] == "CLOSURE")
        .unwrap();
    assert!(closure["witness"]["inputs"]["a"]["entries"].is_array());
}

#[test]
fn check_rejects_unsupported_dimension() {
    let out = run(&["check", "--candidate", "standard", "--dims", "99", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported dimension"));
}

#[test]
fn check_rejects_unknown_candidate() {
    let out = run(&["check", "--candidate", "sorcery", "--dims", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_two() {
    let out = run(&["check", "--candidate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn deterministic_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "check", "--candidate", "standard", "--dims", "2", "--trials", "50", "--seed", "7",
        "--deterministic",
    ];
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let out =
        bin().args(args).arg("--out").arg(&first).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out =
        bin().args(args).arg("--out").arg(&second).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn seed_falls_back_to_environment_variable() {
    let out = bin()
        .args(["check", "--candidate", "standard", "--dims", "2", "--trials", "20",
            "--deterministic"])
        .env("SEQEFFECT_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["config"]["seed"], 123);

    let out = bin()
        .args(["check", "--candidate", "standard", "--dims", "2", "--trials", "20"])
        .env("SEQEFFECT_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ragged_matrix_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(
        dir.path(),
        "ragged.json",
        r#"{"dim": 2, "entries": [[[1,0],[0,0]],[[0,0]]]}"#,
    );
    let out = run(&["trace", "--candidate", "standard", "--effect", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ragged"));
}

#[test]
fn trace_singular_effect_exits_four_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(dir.path(), "zero.json", zero_matrix_json());
    let out = run(&["trace", "--candidate", "standard", "--effect", &path]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--regularize"));
}

#[test]
fn trace_regularized_zero_effect_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(dir.path(), "zero.json", zero_matrix_json());
    let out = run(&[
        "trace", "--candidate", "standard", "--effect", &path, "--regularize", "4",
        "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["passed"], Value::Bool(true));
    // A_4 = (4/5)(0 + I/4) = 0.2·I.
    assert_eq!(report["effect"]["entries"][0][0][0], 0.2);
    assert_eq!(report["trace"]["form"], "CONJUGATION");
}

#[test]
fn trace_random_standard_passes() {
    let out = run(&[
        "trace", "--candidate", "standard", "--random", "--dim", "3", "--seed", "7",
        "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let steps = report["trace"]["steps"].as_array().unwrap();
    assert!(steps.iter().all(|s| s["passed"] == Value::Bool(true)));
}

#[test]
fn trace_unitary_candidate_pinpoints_failure() {
    let dir = tempfile::tempdir().unwrap();
    let u_path = write_file(
        dir.path(),
        "u.json",
        r#"{"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[0,1]]]}"#,
    );
    let candidate = format!("unitary:{u_path}");
    let out = run(&[
        "trace", "--candidate", &candidate, "--random", "--dim", "2", "--seed", "5",
        "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let steps = report["trace"]["steps"].as_array().unwrap();
    let first_fail = steps.iter().find(|s| s["passed"] == Value::Bool(false)).unwrap();
    assert_eq!(first_fail["name"], "unit_probe");
}

#[test]
fn check_unitary_candidate_requires_matching_dims() {
    let dir = tempfile::tempdir().unwrap();
    let u_path = write_file(
        dir.path(),
        "u.json",
        r#"{"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[0,1]]]}"#,
    );
    let candidate = format!("unitary:{u_path}");
    let out = run(&["check", "--candidate", &candidate, "--dims", "2,3", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "check", "--candidate", &candidate, "--dims", "2", "--trials", "500", "--seed", "42",
        "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let report = stdout_json(&out);
    let unit = report["fuzz"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["condition"] == "UNIT")
        .unwrap();
    assert_eq!(unit["passed"], Value::Bool(false));
}

#[test]
fn non_unitary_twist_matrix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let u_path = write_file(
        dir.path(),
        "u.json",
        r#"{"dim": 2, "entries": [[[0.5,0],[0,0]],[[0,0],[1,0]]]}"#,
    );
    let candidate = format!("unitary:{u_path}");
    let out = run(&["check", "--candidate", &candidate, "--dims", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not unitary"));
}

#[test]
fn simulate_trivial_povm_fixes_state() {
    let dir = tempfile::tempdir().unwrap();
    let povm = write_file(
        dir.path(),
        "trivial.json",
        r#"{"dim": 2, "effects": [{"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#,
    );
    let state = write_file(dir.path(), "plus.json", plus_state_json());
    let out = run(&[
        "simulate", "--povm", &povm, "--state", &state, "--steps", "5", "--seed", "1",
        "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["outcomes"], serde_json::json!([0, 0, 0, 0, 0]));
    // Identity measurement leaves |+⟩⟨+| untouched.
    assert_eq!(report["final_state"]["entries"][0][1][0], 0.5);
}

#[test]
fn simulate_projective_measurement_collapses() {
    let dir = tempfile::tempdir().unwrap();
    let povm = write_file(dir.path(), "povm.json", projective_povm_json());
    let state = write_file(dir.path(), "plus.json", plus_state_json());
    let out = run(&[
        "simulate", "--povm", &povm, "--state", &state, "--steps", "4", "--seed", "3",
        "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let steps = report["steps"].as_array().unwrap();
    // First draw is 50/50; afterwards the state is collapsed and every
    // further step repeats the first outcome with probability one.
    let first = steps[0]["outcome"].as_u64().unwrap();
    assert!((steps[0]["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    for step in &steps[1..] {
        assert_eq!(step["outcome"].as_u64().unwrap(), first);
        assert!((step["probability"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn simulate_rejects_incomplete_povm() {
    let dir = tempfile::tempdir().unwrap();
    let povm = write_file(
        dir.path(),
        "bad.json",
        r#"{"dim": 2, "effects": [{"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[0,0]]]}]}"#,
    );
    let state = write_file(dir.path(), "plus.json", plus_state_json());
    let out = run(&["simulate", "--povm", &povm, "--state", &state, "--steps", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolve"));
}

#[test]
fn simulate_validates_state_trace() {
    let dir = tempfile::tempdir().unwrap();
    let povm = write_file(dir.path(), "povm.json", projective_povm_json());
    let state = write_file(
        dir.path(),
        "bad_state.json",
        r#"{"dim": 2, "entries": [[[0.5,0],[0,0]],[[0,0],[0.4,0]]]}"#,
    );
    let out = run(&["simulate", "--povm", &povm, "--state", &state, "--steps", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
