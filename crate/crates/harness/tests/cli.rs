use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"{
  "name": "small",
  "kind": "MaxMinSweep",
  "K": 2,
  "Nt": 2,
  "snr_db": [10],
  "delta": 0.05,
  "channels": 2,
  "seed": 3
}"#;

fn rsbeam(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rsbeam")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let out = dir.path().join("out");
    let o = rsbeam(&["maxmin", "--config", &cfg, "--out-dir", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = rsbeam_harness::read_csv(&out.join("small.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("small_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["total_solves"], 4);
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let read = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = rsbeam(&["maxmin", "--config", &cfg, "--out-dir", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read_to_string(out.join("small.csv")).unwrap()
    };
    let a = read("3", "a");
    let b = read("4", "b");
    assert_ne!(a, b);
    assert!(b.lines().nth(1).unwrap().starts_with("small,0,4,"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &SMALL.replace("\"seed\": 3", "\"seed\": 3,\n  \"extra\": 1"));
    let o = rsbeam(&["validate", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 10"));
    let good = write(dir.path(), "good.json", SMALL);
    assert_eq!(rsbeam(&["validate", "--config", &good]).status.code(), Some(0));
    let o = rsbeam(&["minpower", "--config", &good, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(rsbeam(&["validate", "--config", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let blocker = write(dir.path(), "file", "");
    let o = rsbeam(&["maxmin", "--config", &cfg, "--out-dir", &blocker]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn failure_threshold_maps_to_3() {
    use rsbeam_harness::{experiment::RunOutput, HarnessError};
    let out = |failed, total| RunOutput { failed_solves: failed, total_solves: total, ..RunOutput::default() };
    assert!(!out(1, 10).too_many_failures());
    assert!(out(2, 10).too_many_failures());
    assert_eq!(HarnessError::TooManyFailures { failed: 2, total: 10 }.exit_code(), 3);
}
