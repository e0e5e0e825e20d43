//! End-to-end tests of the `weyl-lab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const CSV_HEADER: &str = "scenario_id,residual,value,tolerance,verdict,n,length,t";

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn weyl_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weyl-lab")).args(args).output().expect("binary runs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    weyl_lab(&args)
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn identity_example_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&example("identity.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let csv = fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(4) == Some("pass")), "{csv}");
    assert!(dir.path().join("convergence.csv").exists());

    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], Value::Bool(true));
    assert_eq!(report["config"]["scenarios"][0]["id"], "identity");
    assert!(report["versions"]["weyl_lab"].is_string());
    assert!(report["total_wall_time_ms"].is_number());
    assert!(report["scenarios"][0]["wall_time_ms"].is_number());
}

#[test]
fn aharonov_bohm_report_names_the_displayed_operator() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&example("aharonov_bohm.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("½(P⁻¹Q + QP⁻¹)"));
    let csv = fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert!(csv.contains("closed_form[aharonov_bohm]"));
    assert!(csv.contains("oracle_max_deviation"));
}

#[test]
fn constant_symbol_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&example("constant_symbol.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Lebesgue"), "{}", stderr(&out));
}

#[test]
fn oversized_oracle_hits_the_resource_cap() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"version": 1, "scenarios": [{"id": "big", "preset": "polynomial", "suites": ["oracle"], "times": [1.0]}]}"#,
    );
    let out = run(&config, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn an_impossible_tolerance_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"version": 1, "scenarios": [{"id": "coarse", "preset": "polynomial",
            "grid": {"n": 256, "length": 60}, "times": [1.0], "suites": ["weak_weyl"],
            "tolerances": {"weak_weyl": 1e-9}}]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&config, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("residuals.csv")).unwrap();
    assert!(csv.contains(",fail,"), "{csv}");
}

#[test]
fn output_is_deterministic_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let config = example("presets.json");
    assert_eq!(run(&config, &a, &["--jobs", "1", "--seed", "11"]).status.code(), Some(0));
    assert_eq!(run(&config, &b, &["--jobs", "4", "--seed", "11"]).status.code(), Some(0));
    assert_eq!(run(&config, &c, &["--jobs", "4", "--seed", "11"]).status.code(), Some(0));
    for file in ["residuals.csv", "convergence.csv"] {
        let first = fs::read(a.join(file)).unwrap();
        assert_eq!(first, fs::read(b.join(file)).unwrap(), "{file}");
        assert_eq!(first, fs::read(c.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn list_presets_prints_every_preset() {
    let out = weyl_lab(&["list-presets"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["polynomial", "log_abs", "semirelativistic", "fractional"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn validate_accepts_the_examples() {
    for name in ["identity.json", "aharonov_bohm.json", "presets.json"] {
        let out = weyl_lab(&["validate", example(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
    }
}

#[test]
fn unknown_suite_and_missing_file_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"version": 1, "scenarios": [{"id": "x", "symbol": "x", "suites": ["telepathy"]}]}"#,
    );
    assert_eq!(weyl_lab(&["validate", config.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&config, &dir.path().join("out"), &[]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(weyl_lab(&["validate", missing.to_str().unwrap()]).status.code(), Some(2));
}
