use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn spr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spr"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPR_SEED")
        .output()
        .expect("spawn spr")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = spr(args, dir);
    assert!(
        out.status.success(),
        "spr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn gen_path_text() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["gen", "path", "n=3"], dir.path());
    assert_eq!(
        text,
        "# 3 vertices, 2 edges, 2 terminals\nv 0\nv 1\nv 2\nt 0\nt 2\ne 0 1 1\ne 1 2 1\n"
    );
    ok(&["gen", "grid", "width=3", "height=2", "terminals=corners", "--out", "g.txt"], dir.path());
    assert!(fs::read_to_string(dir.path().join("g.txt")).unwrap().contains("t 5"));
}

#[test]
fn run_writes_outputs_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "cycle", "n=30", "k=4", "--out", "g.txt"], d);
    let summary = ok(&["run", "--graph", "g.txt", "--seed", "1", "--out", "trace.json", "--analyze"], d);
    assert!(summary.contains("k = 4"));
    for f in ["trace.json", "trace.minor.txt", "trace.distortion.json", "trace.covering.json"] {
        assert!(d.join(f).exists(), "{f} missing");
    }
    assert!(!d.join("trace.subdivided.txt").exists());
    assert!(ok(&["verify", "--graph", "g.txt", "--trace", "trace.json"], d).starts_with("ok:"));

    let from_trace: Value = serde_json::from_str(&ok(&["distort", "--graph", "g.txt", "--trace", "trace.json"], d)).unwrap();
    let from_minor: Value =
        serde_json::from_str(&ok(&["distort", "--graph", "g.txt", "--minor", "trace.minor.txt"], d)).unwrap();
    let written: Value = serde_json::from_str(&fs::read_to_string(d.join("trace.distortion.json")).unwrap()).unwrap();
    assert_eq!(from_trace, written);
    assert_eq!(from_minor, written);

    let csv = ok(&["distort", "--graph", "g.txt", "--trace", "trace.json", "--format", "csv"], d);
    assert!(csv.starts_with("i,j,dG,dM,ratio\n"));
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn tampered_trace_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "cycle", "n=20", "k=3", "--out", "g.txt"], d);
    ok(&["run", "--graph", "g.txt", "--seed", "2", "--out", "t.json"], d);
    let mut trace: Value = serde_json::from_str(&fs::read_to_string(d.join("t.json")).unwrap()).unwrap();
    let q = trace["events"][0]["q"].as_f64().unwrap();
    trace["events"][0]["q"] = (2.0 * q).into();
    fs::write(d.join("bad.json"), serde_json::to_string(&trace).unwrap()).unwrap();
    let out = spr(&["verify", "--graph", "g.txt", "--trace", "bad.json"], d);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("violation"));
}

#[test]
fn subdivided_run_verifies_against_original_graph() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "path", "n=4", "--out", "g.txt"], d);
    ok(&["run", "--graph", "g.txt", "--subdivide", "--out", "t.json"], d);
    assert!(d.join("t.subdivided.txt").exists());
    let trace: Value = serde_json::from_str(&fs::read_to_string(d.join("t.json")).unwrap()).unwrap();
    assert_eq!(trace["params"]["subdivided"], true);
    ok(&["verify", "--graph", "g.txt", "--trace", "t.json"], d);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "random-weighted", "n=30", "edge_prob=0.2", "k=5", "--seed", "9", "--out", "g.txt"], d);
    ok(&["run", "--graph", "g.txt", "--seed", "5", "--out", "a.json"], d);
    ok(&["run", "--graph", "g.txt", "--seed", "5", "--out", "b.json"], d);
    assert_eq!(fs::read(d.join("a.json")).unwrap(), fs::read(d.join("b.json")).unwrap());
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "cycle", "n=20", "k=3", "--out", "g.txt"], d);
    let out = Command::new(env!("CARGO_BIN_EXE_spr"))
        .args(["run", "--graph", "g.txt", "--out", "t.json"])
        .current_dir(d)
        .env("SPR_SEED", "77")
        .output()
        .unwrap();
    assert!(out.status.success());
    let trace: Value = serde_json::from_str(&fs::read_to_string(d.join("t.json")).unwrap()).unwrap();
    assert_eq!(trace["params"]["seed"], 77);
}

#[test]
fn oracle_on_star() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "star", "leaves=3", "--out", "s.txt"], d);
    let v: Value = serde_json::from_str(&ok(&["oracle", "--graph", "s.txt", "--compare", "4"], d)).unwrap();
    assert_eq!(v["oracle"]["best_distortion"], 2.0);
    assert_eq!(v["comparison"].as_array().unwrap().len(), 4);
    let csv = ok(&["oracle", "--graph", "s.txt", "--compare", "2", "--format", "csv"], d);
    assert_eq!(csv, "seed,spr_distortion,oracle_distortion,ratio\n0,2.0,2.0,1.0\n1,2.0,2.0,1.0\n");
}

#[test]
fn analyze_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::create_dir(d.join("traces")).unwrap();
    ok(&["gen", "path", "n=80", "k=3", "--out", "g.txt"], d);
    for s in ["1", "2", "3"] {
        ok(&["run", "--graph", "g.txt", "--seed", s, "--out", &format!("traces/t{s}.json")], d);
    }
    // Terminals of path(80, 3) are 0, 40 and 79; the pair (0, 79) splits at 40.
    let v: Value = serde_json::from_str(&ok(&["analyze", "--graph", "g.txt", "--pair", "0", "79", "--traces", "traces"], d)).unwrap();
    assert_eq!(v["pairs"], serde_json::json!([[0, 1], [1, 2]]));
    assert_eq!(v["traces"].as_array().unwrap().len(), 3);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "charging failure rate"));
    for c in checks {
        for key in ["name", "statistic", "bound", "slack", "pass", "n_trials", "seed"] {
            assert!(c.get(key).is_some());
        }
    }
    assert_eq!(v["fbound"]["runs"], 6);

    let csv = ok(&["analyze", "--graph", "g.txt", "--pair", "0", "79", "--traces", "traces", "--format", "csv"], d);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("trace,seed,from,to,length,"));
    assert_eq!(lines.count(), 6);

    let out = spr(&["analyze", "--graph", "g.txt", "--pair", "0", "1", "--traces", "traces"], d);
    assert_eq!(code(&out), 2);
}

#[test]
fn experiment_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("spec.json"),
        r#"{"graph": {"family": "cycle", "n": 40, "k": 4}, "k_values": [2, 4], "seeds": 3, "base_seed": 11}"#,
    )
    .unwrap();
    let a = ok(&["experiment", "--spec", "spec.json", "--jobs", "2"], d);
    let b = ok(&["experiment", "--spec", "spec.json", "--analyze"], d);
    let c = ok(&["experiment", "--spec", "spec.json"], d);
    assert_eq!(a, c);
    assert!(a.starts_with("config,run,family,n,n_run,k,seed,"));
    assert_eq!(a.lines().count(), 7);
    assert_ne!(a, b);
    let json = ok(&["experiment", "--spec", "spec.json", "--format", "json"], d);
    assert_eq!(serde_json::from_str::<Value>(&json).unwrap().as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&spr(&["run", "--graph", "missing.txt", "--out", "t.json"], d)), 3);
    assert_eq!(code(&spr(&["run", "--bogus"], d)), 2);
    assert_eq!(code(&spr(&["gen", "hexagon"], d)), 2);
    assert_eq!(code(&spr(&["gen", "path", "n"], d)), 2);
    fs::write(d.join("bad.txt"), "v 0\ne 0 1 x\n").unwrap();
    assert_eq!(code(&spr(&["run", "--graph", "bad.txt", "--out", "t.json"], d)), 3);
    fs::write(d.join("one.txt"), "v 0\nv 1\nt 0\ne 0 1 1\n").unwrap();
    assert_eq!(code(&spr(&["oracle", "--graph", "one.txt"], d)), 2);
}
