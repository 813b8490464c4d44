//! Command-line behaviour of the `regan` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn regan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regan")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_config(text: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (regan(&args), dir)
}

fn report(dir: &tempfile::TempDir) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn laplacian_config_reaches_second_order() {
    let text = std::fs::read_to_string(configs().join("laplacian.json")).unwrap();
    let (out, dir) = run_config(&text, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&dir);
    let keys: Vec<&str> = rep.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["config", "results", "schema", "timings", "verdict", "version"]);
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["verdict"]["laplacian"]["conclusion"], "second_order_differentiable");
    let criteria = rep["results"]["laplacian"]["criteria"]["results"].as_array().unwrap();
    assert!(!criteria.is_empty());
    assert!(criteria.iter().all(|c| c["verdict"] == "holds"), "{criteria:?}");
    assert!(dir.path().join("out/laplacian_moments.csv").exists());
}

#[test]
fn log_unstable_has_no_guarantee() {
    let text = std::fs::read_to_string(configs().join("log_unstable.json")).unwrap();
    let (out, dir) = run_config(&text, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&dir);
    assert_eq!(rep["verdict"]["log_unstable"]["conclusion"], "no_guarantee");
    assert_eq!(rep["verdict"]["log_unstable"]["probes"]["stability"], "unstable");
}

#[test]
fn invalid_configs_exit_with_config_code() {
    let cases = [
        (r#"{"schema": 1, "families": [{"name": "laplacian"}], "bogus": 3}"#, "bogus"),
        (r#"{"schema": 2, "families": [{"name": "laplacian"}]}"#, "schema"),
        (r#"{"schema": 1, "families": [{"name": "laplacian"}], "criteria": {"tol": -1.0}}"#, "tolerances must be positive"),
        (r#"{"schema": 1, "families": [{"name": "laplacian"}], "analyses": ["compare"]}"#, "compare requires pde"),
        (r#"{"schema": 1, "families": [{"name": "no_such_family"}]}"#, "no_such_family"),
        ("not json", "JSON"),
    ];
    for (text, needle) in cases {
        let (out, dir) = run_config(text, &[]);
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{text}: {stderr}");
        assert!(stderr.contains(needle), "{text}: {stderr}");
        assert!(!dir.path().join("out/report.json").exists());
    }
}

#[test]
fn all_violations_are_reported_together() {
    let text = r#"{"schema": 7, "families": [{"name": "laplacian"}], "criteria": {"tol": 0.0}, "analyses": ["compare"]}"#;
    let (out, _dir) = run_config(text, &[]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2));
    for needle in ["schema", "tolerances must be positive", "compare requires pde"] {
        assert!(stderr.contains(needle), "{needle}: {stderr}");
    }
}

#[test]
fn rejected_family_is_numeric_failure() {
    let text = r#"{"schema": 1, "analyses": ["validate"], "families": [{"name": "big", "family": "harmonic",
        "target": "a", "profile": {"kind": "power", "scale": 5.0, "alpha": 0.5}, "mode": 2, "phase": 0.0}]}"#;
    let (out, _dir) = run_config(text, &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn families_lists_builtins() {
    let out = regan(&["families"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["laplacian", "dini_power", "log_mild", "log_unstable", "oscillatory", "radial", "trig_poly"] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}

#[test]
fn seed_and_thread_overrides_are_recorded() {
    let text = r#"{"schema": 1, "families": [{"name": "tp", "family": "trig_poly", "degree": 3}], "analyses": ["moments"]}"#;
    let (out, a) = run_config(text, &["--seed", "11", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ra = report(&a);
    assert_eq!(ra["config"]["seed"], 11);
    assert_eq!(ra["config"]["threads"], 2);
    let (_, b) = run_config(text, &["--seed", "12"]);
    let rb = report(&b);
    assert_eq!(rb["config"]["seed"], 12);
    assert_ne!(ra["results"]["tp"]["moments"], rb["results"]["tp"]["moments"]);
}
