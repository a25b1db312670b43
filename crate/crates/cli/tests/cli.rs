use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cocokit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocokit"))
        .args(args)
        .env("COCOKIT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn selftest_passes() {
    let out = cocokit(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().count() >= 5);
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn oracle_check_each_set() {
    for set in ["box", "simplex", "ball", "flow"] {
        assert_eq!(cocokit(&["oracle-check", "--set", set, "--trials", "40"]).status.code(), Some(0));
    }
    assert_eq!(cocokit(&["oracle-check", "--set", "cone"]).status.code(), Some(1));
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = cocokit(&["run", "--T", "64", "--seed", "3", "--out", path_str(dir.path()), "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let trace = fs::read_to_string(dir.path().join("trace_coco_T64_seed3.csv")).unwrap();
    assert_eq!(trace.lines().count(), 65);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("T,seed,final_regret,final_ccv,total_runtime_ns,oracle_calls"));
    assert!(summary.lines().nth(1).unwrap().ends_with(",64"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"policy": "baseline-projected", "set_kind": "path-simplex", "T": 100, "seed": 5}"#).unwrap();
    let out = cocokit(&["run", "--config", path_str(&cfg), "--T", "40", "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("trace_baseline-projected_T40_seed5.csv").exists());
}

#[test]
fn malformed_config_exits_one_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"policy": "coco", "beta": 1.5}"#).unwrap();
    let out = cocokit(&["run", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));

    fs::write(&cfg, r#"{"policy": "gradient-descent"}"#).unwrap();
    let out = cocokit(&["run", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(cocokit(&["run", "--unknown-flag"]).status.code(), Some(1));
    assert_eq!(cocokit(&["run", "--config", "/nonexistent/cfg.json"]).status.code(), Some(1));
}

#[test]
fn repeated_invocations_are_byte_identical() {
    for policy in ["coco", "bandit-cbco"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for d in [&a, &b] {
            let out = cocokit(&["run", "--policy", policy, "--T", "128", "--seed", "9", "--out", path_str(d.path())]);
            assert_eq!(out.status.code(), Some(0));
        }
        let name = format!("trace_{policy}_T128_seed9.csv");
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        assert_eq!(
            fs::read(a.path().join("summary.csv")).unwrap(),
            fs::read(b.path().join("summary.csv")).unwrap()
        );
    }
}

#[test]
fn sweep_writes_one_summary_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(&cfg, r#"{"sweep": {"T_list": [32, 64], "seeds": [0, 1, 2]}}"#).unwrap();
    let out = cocokit(&["sweep", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 7);
    assert!(dir.path().join("trace_coco_T64_seed2.csv").exists());

    let out = cocokit(&["sweep", "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn decompose_prints_weighted_paths() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let flow = dir.path().join("f.txt");
    fs::write(&graph, "nodes 4 source 0 sink 3\n0 1\n1 3\n0 2\n2 3\n1 2\n").unwrap();
    fs::write(&flow, "0.5, 0.25, 0.5, 0.75, 0.25\n").unwrap();
    let out = cocokit(&["decompose", "--graph", path_str(&graph), "--flow", path_str(&flow)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let total: f64 = stdout
        .lines()
        .map(|l| l.split('\t').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(stdout.lines().count(), 3);

    fs::write(&flow, "0.5 0.5 0.5 0.25 0.0\n").unwrap();
    let out = cocokit(&["decompose", "--graph", path_str(&graph), "--flow", path_str(&flow)]);
    assert_eq!(out.status.code(), Some(1));
}
