use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hgroup(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgroup"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn report(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("out/report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn validate_group_on_heisenberg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"group": "heisenberg(1)"}"#);
    let out = hgroup(&["validate-group", "--config", &cfg, "--out", "out", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r = report(dir.path());
    assert_eq!(r["schema"], 1);
    let result = &r["tasks"][0]["result"];
    assert_eq!(result["step"], 2);
    assert_eq!(result["homogeneous_dim"], 4);
    assert!(dir.path().join("out/summary.txt").exists());
}

#[test]
fn paraboloid_origin_is_advisory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "group": "heisenberg(1)",
            "distance": {"kind": "box"},
            "submanifold": {"n": 2, "exprs": "y1; y2; y1^2 + y2^2", "domain": [[-1, 1], [-1, 1]]},
            "tasks": [{"task": "area-check", "probes": [[0, 0]]}]
        }"#,
    );
    let out = hgroup(&["run", "--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path());
    let verdicts = r["tasks"][0]["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 1);
    assert_eq!(verdicts[0]["advisory"], true);
    assert!(verdicts[0]["note"].as_str().unwrap().contains("irregular"));
    let measure = r["tasks"][0]["result"]["measure"]["value"].as_f64().unwrap();
    assert!(measure > 0.0);
}

#[test]
fn malformed_brackets_fail_with_grading_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"group": {"name": "bad", "layers": [2, 1], "brackets": [[1, 3, 2, 1.0]]}}"#,
    );
    let out = hgroup(&["validate-group", "--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["group_error"]["kind"], "GradingViolation");
    assert_eq!(r["tasks"][0]["status"], "error");
    assert_eq!(r["tasks"][0]["error"]["kind"], "GradingViolation");
    assert_eq!(r["passed"], false);
}

#[test]
fn unknown_keys_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"group": "heisenberg(1)", "sead": 1}"#);
    let out = hgroup(&["run", "--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn catalog_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = hgroup(&["catalog", "--out", "out", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    let groups = r["tasks"][0]["result"]["groups"].as_array().unwrap();
    let row = |name: &str| groups.iter().find(|g| g["name"] == name).unwrap().clone();
    let h1 = row("heisenberg(1)");
    assert_eq!((h1["dim"].as_u64(), h1["step"].as_u64(), h1["homogeneous_dim"].as_u64()), (Some(3), Some(2), Some(4)));
    assert_eq!(h1["q_n"], serde_json::json!([2, 3, 4]));
    let h2 = row("heisenberg(2)");
    assert_eq!((h2["dim"].as_u64(), h2["homogeneous_dim"].as_u64()), (Some(5), Some(6)));
    assert_eq!(h2["q_n"][2], 4);
    assert_eq!(row("abelian(3)")["q_n"], serde_json::json!([1, 2, 3]));

    let text = hgroup(&["catalog"], dir.path());
    let listing = String::from_utf8(text.stdout).unwrap();
    assert!(listing.lines().any(|l| l.starts_with("heisenberg(1)") && l.ends_with("2 3 4")));
}

#[test]
fn failing_verdict_gives_nonzero_exit_and_traces() {
    // span{e1, e2} is not vertical, so the translation task errors out.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "group": "heisenberg(1)",
            "distance": {"kind": "box"},
            "submanifold": {"n": 1, "exprs": "cos(y1); sin(y1); y1", "domain": [[-1, 1]]},
            "tasks": [
                {"task": "degree-map", "grid": [5]},
                {"task": "concavity-check", "body": {"kind": "cube"}, "subspace": {"coordinates": [1, 2]}, "segments": 20, "samples": 4000},
                {"task": "translation-check", "subspace": {"coordinates": [1, 2]}, "pairs": 2}
            ]
        }"#,
    );
    let out = hgroup(&["run", "--config", &cfg, "--out", "out", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["tasks"][0]["status"], "passed");
    assert_eq!(r["tasks"][1]["status"], "passed");
    assert_eq!(r["tasks"][2]["error"]["kind"], "NotVertical");
    let csv = std::fs::read_to_string(dir.path().join("out/task00-degree-map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("y1,degree,class"));
}

#[test]
fn seed_and_samples_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"group": "engel", "seed": 1, "tasks": [{"task": "prop-suite", "samples": 100000}]}"#,
    );
    let out = hgroup(&["prop-suite", "--config", &cfg, "--out", "out", "--seed", "9", "--samples", "50"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["config"]["seed"], 9);
    assert_eq!(r["tasks"][0]["result"]["samples"], 50);
}
