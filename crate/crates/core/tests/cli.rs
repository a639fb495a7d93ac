//! End-to-end tests of the `filtration-lab` binary: exit codes, report
//! formats, config overlay, and byte-level determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_filtration-lab"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?} for {args:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn worked_example_flag_exits_zero_with_expected_sets() {
    for flag in ["--diagram", "--paper-diagram"] {
        let out = run_ok(&["cascade", flag]);
        let report = stdout_json(&out);
        let checks = report["checks"].as_array().expect("checks array");
        assert_eq!(checks.len(), 1);
        assert_eq!(checks[0]["name"], "diagram-fixture");
        assert_eq!(checks[0]["pass"], true);
        let detail = checks[0]["detail"].as_str().unwrap_or("");
        for expected in ["J_1={3,4,7,8,10,11}", "J_2={1,2,5,6}", "J_3={2,3}"] {
            assert!(detail.contains(expected), "missing {expected} in {detail}");
        }
    }
}

#[test]
fn depth_zero_single_trial_reports_product_bound_half() {
    let out = run_ok(&["tsirelson", "--depth", "0", "--trials", "1"]);
    let report = stdout_json(&out);
    let bound_check = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "product-bound-value")
        .expect("product bound check present");
    assert_eq!(bound_check["observed"], 0.5);
    assert_eq!(bound_check["bound"], 0.5);
    assert_eq!(bound_check["pass"], true);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["decimate", "--trials", "2000", "--seed", "42"];
    let first = run_ok(&args);
    let second = run_ok(&args);
    assert_eq!(first.stdout, second.stdout);

    let csv_args = ["exchange-suite", "--trials", "30", "--format", "csv"];
    let first = run_ok(&csv_args);
    let second = run_ok(&csv_args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn csv_format_has_header_and_one_row_per_check() {
    let out = run_ok(&["tsirelson", "--depth", "1", "--trials", "200", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).expect("utf8");
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("experiment,name,anchor,observed,bound,sigma,pass,detail,version")
    );
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 5, "too few rows: {rows:?}");
    assert!(rows.iter().all(|r| r.starts_with("tsirelson,")));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = std::env::temp_dir();
    let path: PathBuf = dir.join("filtration-lab-cli-config.json");
    std::fs::write(&path, r#"{"seed": 9, "trials": 500, "depth": 1}"#).unwrap();
    let out = run_ok(&[
        "tsirelson",
        "--config",
        path.to_str().unwrap(),
        "--trials",
        "800",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["trials"], 800);
    assert_eq!(report["config"]["depth"], 1);
}

#[test]
fn out_file_receives_the_report_and_stdout_stays_quiet() {
    let path = std::env::temp_dir().join("filtration-lab-cli-out.json");
    let _ = std::fs::remove_file(&path);
    let out = run_ok(&[
        "exchange-suite",
        "--trials",
        "25",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.stdout.is_empty(), "stdout not quiet");
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written["experiment"], "exchange-suite");
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let out = bin()
        .args(["decimate", "--config", "/nonexistent/config.json"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let path = std::env::temp_dir().join("filtration-lab-cli-bad.json");
    std::fs::write(&path, r#"{"bogus_field": 1}"#).unwrap();
    let out = bin()
        .args(["decimate", "--config", path.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["decimate", "--trials", "100", "--format", "yaml"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("format"));

    let out = bin().args(["warp-drive"]).output().expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn suite_runs_all_experiments_and_prefixes_check_names() {
    let out = run_ok(&["suite", "--seed", "20260814"]);
    let report = stdout_json(&out);
    assert_eq!(report["experiment"], "suite");
    let checks = report["checks"].as_array().unwrap();
    for prefix in [
        "decimate/",
        "cascade/",
        "cascade-collapsed/",
        "tsirelson/",
        "entropy-suite/",
        "exchange-suite/",
    ] {
        assert!(
            checks
                .iter()
                .any(|c| c["name"].as_str().unwrap().starts_with(prefix)),
            "no checks from {prefix}"
        );
    }
    assert!(checks.iter().all(|c| c["pass"] == true));
}
