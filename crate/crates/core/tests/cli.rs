mod common;

use common::*;
use reglab::scenario::{run_scenario, PresetParams, RunOptions, Verdict, PRESETS};
use std::path::Path;
use std::process::{Command, Output};

fn reglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reglab")).args(args).output().expect("binary runs")
}

fn emit(dir: &Path, name: &str, params: &[&str]) -> String {
    let path = dir.join(format!("{name}.json"));
    let mut args = vec!["preset", name, "--emit", path.to_str().unwrap()];
    for kv in params {
        args.extend(["--param", kv]);
    }
    assert_eq!(reglab(&args).status.code(), Some(0));
    path.to_str().unwrap().to_string()
}

#[test]
fn every_preset_meets_its_expectations() {
    for (name, _, _) in PRESETS {
        let sc = preset_with(name, &PresetParams::new());
        let r = run_scenario(&sc, RunOptions::default()).unwrap();
        for c in &r.results {
            assert!(c.passed, "{name}: [{}] {} gave {:?} {}", c.index, c.check, c.verdict, c.data);
            assert_ne!(c.verdict, Verdict::Error, "{name}: [{}] {}", c.index, c.check);
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = emit(dir.path(), "ex2_1a", &[]);
    assert_eq!(reglab(&["run", &a]).status.code(), Some(0));
    let b = emit(dir.path(), "rem3_3b", &[]);
    assert_eq!(reglab(&["run", &b]).status.code(), Some(0));
    assert_eq!(reglab(&["run", &b, "--assert-holds"]).status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"sets\": [").unwrap();
    assert_eq!(reglab(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(reglab(&["run", dir.path().join("missing.json").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(reglab(&["preset", "no_such_preset"]).status.code(), Some(2));
    assert_eq!(reglab(&["preset", "two_lines", "--param", "theta=120"]).status.code(), Some(2));
    assert_eq!(reglab(&["preset", "ex2_1a", "--param", "theta"]).status.code(), Some(2));
    assert_eq!(reglab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn list_checks_names_checks_and_presets() {
    let out = reglab(&["list-checks"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["subtransversality", "chip-frechet", "error-bound", "property-g", "cyclic-projections", "two_lines", "hoffman_demo"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn csv_table_has_a_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let f = emit(dir.path(), "ex_rem3_1", &[]);
    let csv = dir.path().join("s.csv");
    assert_eq!(reglab(&["run", &f, "--csv", csv.to_str().unwrap()]).status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("command,sample,x1,x2,ratio"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').count() == 5));
}

#[test]
fn json_reports_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let f = emit(dir.path(), "hoffman_demo", &[]);
    let read = |tag: &str, threads: &str| {
        let out = dir.path().join(format!("{tag}.json"));
        let st = Command::new(env!("CARGO_BIN_EXE_reglab"))
            .args(["run", &f, "--seed", "11", "--out", out.to_str().unwrap()])
            .env("REGLAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(st.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    let one = read("a", "1");
    assert_eq!(one, read("b", "1"));
    assert_eq!(one, read("c", "4"));
    let v: serde_json::Value = serde_json::from_slice(&one).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["environment"]["seed"], 11);
}

#[test]
fn perpendicular_lines_have_unit_modulus() {
    let dir = tempfile::tempdir().unwrap();
    let f = emit(dir.path(), "two_lines", &["theta=90"]);
    let out = dir.path().join("r.json");
    assert_eq!(reglab(&["run", &f, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let sub = v["results"].as_array().unwrap().iter().find(|r| r["check"] == "subtransversality").unwrap();
    assert_eq!(sub["verdict"], "holds");
    let tau = sub["data"]["tau_hat"].as_f64().unwrap();
    assert!((tau - 1.0).abs() <= 1e-6, "{tau}");
}

#[test]
fn text_report_goes_to_non_json_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = emit(dir.path(), "ex2_1b", &[]);
    let out = dir.path().join("r.txt");
    let o = reglab(&["run", &f, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text, String::from_utf8(o.stdout).unwrap());
    assert!(text.contains("all assertive checks passed"));
}
