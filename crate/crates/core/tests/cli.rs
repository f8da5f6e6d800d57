use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oaforge::io::parse_design;
use serde_json::Value;

fn oaforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oaforge"))
        .args(args)
        .current_dir(dir)
        .env_remove("OAFORGE_JOBS")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&oaforge(d, &["--help"])), 0);
    assert_eq!(code(&oaforge(d, &["construct", "--m", "4"])), 1);
    assert_eq!(code(&oaforge(d, &["construct", "--m", "4", "--n", "5"])), 1);
    assert_eq!(code(&oaforge(d, &["construct", "--m", "4", "--n", "4", "--lambda", "2"])), 1);
    assert_eq!(code(&oaforge(d, &["construct", "--m", "3", "--n", "8"])), 2);
    assert_eq!(code(&oaforge(d, &["evaluate", "--in", "missing.txt"])), 2);
    fs::write(d.join("bad.txt"), "0123\n0124\n").unwrap();
    let out = oaforge(d, &["evaluate", "--in", "bad.txt"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = oaforge(d, &["construct", "--m", "4", "--n", "4", "--out", "no/such/dir/d.txt"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn construct_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = oaforge(d, &["construct", "--m", "6", "--n", "10", "--seed", "3", "--out", "d.txt", "--report", "r.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(d.join("d.txt")).unwrap();
    let file = parse_design(&text).unwrap();
    assert_eq!(file.design.n(), 10);
    assert_eq!(oaforge::io::write_design(&file.design, &file.meta), text);

    assert_eq!(code(&oaforge(d, &["evaluate", "--in", "d.txt", "--out", "e.json"])), 0);
    let (built, evaluated) = (json(&d.join("r.json")), json(&d.join("e.json")));
    for key in ["k_min", "k_ave", "k_m2", "c1", "c2", "tr_m2", "phi", "bounds", "foldover"] {
        assert_eq!(built[key], evaluated[key], "{key}");
    }
    assert_eq!(built["foldover"], Value::Bool(true));
}

#[test]
fn small_foldover_reaches_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = oaforge(dir.path(), &["construct", "--m", "4", "--n", "4", "--method", "fsa-kd", "--seed", "1", "--out", "d.txt"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["k_min"], 3);
    assert_eq!(report["k_ave"]["exact"], "4");
}

#[test]
fn srs_rows_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let out = oaforge(dir.path(), &["construct", "--m", "8", "--n", "16", "--method", "srs", "--seed", "2", "--report", "r.json"]);
    assert_eq!(code(&out), 0);
    let file = parse_design(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(file.design.n(), 16);
    assert!(!file.design.has_repeats());
}

#[test]
fn evaluate_example_designs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("d1.txt"), "0123\n1230\n2301\n3012\n").unwrap();
    let out = oaforge(d, &["evaluate", "--in", "d1.txt"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["k_min"], 3);
    for (key, exact) in [("k_ave", "10/3"), ("k_m2", "34/3"), ("c1", "1"), ("c2", "2/3"), ("tr_m2", "208")] {
        assert_eq!(v[key]["exact"], exact, "{key}");
    }

    fs::write(d.join("d2.txt"), "0,1,2,3\n1,3,0,2\n2,0,3,1\n3,2,1,0\n").unwrap();
    let v: Value = serde_json::from_slice(&oaforge(d, &["evaluate", "--in", "d2.txt"]).stdout).unwrap();
    assert_eq!(v["k_m2"]["exact"], "18");
    assert!((v["phi"].as_f64().unwrap() - (0.5 + 0.5 * 6.0 / 13.0)).abs() < 1e-12);

    fs::write(d.join("dup.txt"), "0123\n0123\n1230\n").unwrap();
    let out = oaforge(d, &["evaluate", "--in", "dup.txt"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("repeat"));
}

#[test]
fn bench_with_seconds_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = oaforge(
        dir.path(),
        &["bench", "--m-list", "5", "--n-list", "2m", "--reps", "2", "--budget", "seconds:0.05", "--summary", "s.txt"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1..].iter().all(|l| l.starts_with("5,10,")));
    assert!(dir.path().join("s.txt").exists());
}

#[test]
fn bo_demo_trace_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = oaforge(
        dir.path(),
        &["bo-demo", "--m", "6", "--n-init", "6", "--n-seq", "4", "--reps", "2", "--restarts", "2", "--summary", "s.csv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2 * 10);
    for rep in rows.chunks(10) {
        assert!(rep.windows(2).all(|w| w[1][2] <= w[0][2]));
    }
    let summary = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2 + 10);
}
