use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn autocorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autocorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn entry<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["name"] == name)
        .unwrap_or_else(|| panic!("no entry {name}"))
}

#[test]
fn interval_constants_table_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = autocorr(&["constants", "--weight", "interval", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["schema"], 1);
    assert_eq!(r["config"]["p-min"], 2.0);
    let inf = entry(&r, "inf_p C_p(interval)");
    assert!((inf["value"].as_f64().unwrap() - 0.864).abs() <= 5e-4);
    for e in r["entries"].as_array().unwrap() {
        assert!(e["tolerance"].is_number() && e["module"].is_string());
    }
    let csv = std::fs::read_to_string(dir.path().join("constants_sweep.csv")).unwrap();
    assert!(csv.starts_with("p,K_p,I_w_p,C_p\n"));
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn roots_report() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("roots.json");
    let o = autocorr(&["roots", "--json", json.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = read_json(&json);
    assert!((entry(&r, "theta0")["value"].as_f64().unwrap() - 0.217234).abs() <= 1e-6);
    assert!((entry(&r, "xi0")["value"].as_f64().unwrap() - 0.71514).abs() <= 1e-5);
}

#[test]
fn singular_example_min01() {
    let o = autocorr(&["evaluate", "--family", "bs-example", "--functional", "min01"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let v: f64 = text.split("min01 = ").nth(1).unwrap()[..11].trim().parse().unwrap();
    assert!(v >= 0.3788 - 1e-3, "{v}");
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{\n  \"command\": \"search\",\n  \"budgett\": 10\n}\n").unwrap();
    let o = autocorr(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("budgett") && err.contains("line 3"), "{err}");

    assert_eq!(code(&autocorr(&["constants", "--nonsense"])), 2);
    assert_eq!(code(&autocorr(&["evaluate", "--family", "gaussian", "--param", "-1", "--functional", "mean"])), 2);
    assert_eq!(code(&autocorr(&["evaluate", "--family", "bs-example", "--functional", "mean"])), 2);
    assert_eq!(code(&autocorr(&["search", "--functional", "mean", "--budget", "10"])), 2);
    assert_eq!(code(&autocorr(&[])), 2);
}

#[test]
fn thread_cap_from_environment() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_autocorr"))
            .arg("roots")
            .env("AUTOCORR_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("zero")), 2);
}

#[test]
fn search_is_reproducible_and_config_merges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    std::fs::write(
        &cfg,
        r#"{"command": "search", "functional": "min01", "family": "piecewise-constant", "cells": 8, "budget": 800, "seed": 5}"#,
    )
    .unwrap();
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = autocorr(&["--config", cfg.to_str().unwrap(), "--budget", "600", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let mut r = read_json(&out.join("report.json"));
        assert_eq!(r["config"]["budget"], 600);
        assert_eq!(r["config"]["seed"], 5);
        r.as_object_mut().unwrap().remove("timestamp");
        r["config"].as_object_mut().unwrap().remove("out");
        let csv = std::fs::read_to_string(out.join("search_trace.csv")).unwrap();
        assert!(csv.starts_with("eval_index,best_value\n"));
        assert_eq!(csv.lines().count(), 601);
        reports.push((r, csv));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn dual_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = autocorr(&["dual", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("dual.csv")).unwrap();
    assert!(csv.starts_with("bump,pos_mass,bound,margin\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn corrupted_constant_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("v.json");
    let o = autocorr(&["verify", "--inject-fault", "4", "--json", json.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("criterion 4"), "{err}");
    let r = read_json(&json);
    let criteria = r["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 9);
    for c in criteria {
        assert_eq!(c["passed"], c["id"] != 4);
        for check in c["checks"].as_array().unwrap() {
            assert!(check["reference"].is_string() && check["tolerance"].is_number());
        }
    }
}
