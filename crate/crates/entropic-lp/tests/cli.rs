//! End-to-end runs of the `entropic-lp` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entropic-lp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(text: &[u8]) -> serde_json::Value {
    serde_json::from_slice(text).expect("valid JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_solve_ghn() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("ghn.json");
    let out = run(&["generate", "--ghn", "--out", path_str(&inst)]);
    assert!(out.status.success());
    let file = json(&std::fs::read(&inst).unwrap());
    assert_eq!(file["cost"][0][0][0], 0.0);
    assert_eq!(file["cost"][1][1][1], 0.0);

    let out = run(&["solve", "--instance", path_str(&inst), "--eps-b", "1e-10", "--eps-f", "1e-12"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out.stdout);
    assert!((report["value"].as_f64().unwrap() - 0.18929).abs() < 1e-4);
    assert!((report["lambda"].as_f64().unwrap() - 0.39166).abs() < 1e-4);
    assert_eq!(report["outer_iterations"], 34);
    assert_eq!(report["phase"], "Active");
    for key in ["g", "inner_iterations_total", "elapsed_s", "policy"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn extended_ten_takes_33_steps() {
    let out = run(&["solve", "--generate", "extended", "--d", "10"]);
    assert!(out.status.success());
    assert_eq!(json(&out.stdout)["outer_iterations"], 33);
}

#[test]
fn random_generation_is_deterministic() {
    let a = run(&["generate", "--random", "--dims", "5,10,10", "--seed", "1"]);
    let b = run(&["generate", "--random", "--dims", "5,10,10", "--seed", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let file = json(&a.stdout);
    assert_eq!(file["cost"].as_array().unwrap().len(), 10);
    assert_eq!(file["cost"][0].as_array().unwrap().len(), 5);
    assert_eq!(file["cost"][0][0].as_array().unwrap().len(), 10);
}

#[test]
fn traces_and_reports_are_reproducible_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run_id in 0..2 {
        let trace = dir.path().join(format!("trace{run_id}.csv"));
        let report = dir.path().join(format!("report{run_id}.json"));
        let out = run(&[
            "solve",
            "--generate",
            "ghn",
            "--trace",
            path_str(&trace),
            "--report",
            path_str(&report),
            "--no-timing",
            "--paper-txt",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let outer = std::fs::read_to_string(&trace).unwrap();
        let inner = std::fs::read_to_string(dir.path().join(format!("trace{run_id}.inner.csv"))).unwrap();
        let lambda_txt = std::fs::read_to_string(dir.path().join(format!("trace{run_id}.lambda.txt"))).unwrap();
        assert!(dir.path().join(format!("trace{run_id}.error.txt")).exists());
        outputs.push((outer, inner, std::fs::read_to_string(&report).unwrap(), lambda_txt));
    }
    let (outer, inner, _, lambda_txt) = &outputs[0];
    assert_eq!(outputs[0], outputs[1]);
    let lines: Vec<&str> = outer.lines().collect();
    assert_eq!(lines[0], "k,lambda,value,g,residual,elapsed_s");
    assert_eq!(lines.len(), 35);
    let ks: Vec<usize> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[1] == w[0] + 1));
    assert!(inner.starts_with("k,n,F,residual,elapsed_s"));
    assert_eq!(lambda_txt.lines().count(), 34);
}

#[test]
fn malformed_input_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"p": [0.0, 1.0], "cost": [[[0,1],[1,1]],[[1,1],[1,0]]]}"#).unwrap();
    let out = run(&["solve", "--instance", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = json(&out.stderr);
    assert_eq!(err["error"], "NonPositivePrior");

    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["solve", "--instance", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out.stderr)["error"], "Parse");
}

#[test]
fn numerical_failure_exits_with_code_3() {
    let out = run(&["solve", "--generate", "ghn", "--max-inner", "1", "--max-outer", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out.stderr)["error"], "MaxOuterExceeded");
}

#[test]
fn ba_on_ghn_is_not_reducible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("ghn.json");
    assert!(run(&["generate", "--ghn", "--out", path_str(&inst)]).status.success());
    let out = run(&["ba", "--instance", path_str(&inst)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out.stderr)["error"], "NotReducible");
}

#[test]
fn ba_tiled_and_cross_checked() {
    let dir = tempfile::tempdir().unwrap();
    let reduced = dir.path().join("reduced.json");
    std::fs::write(
        &reduced,
        r#"{"num_a": 2, "p": [0.3, 0.3, 0.4], "cost": [[0.0, 1.0, 2.0], [1.5, 0.0, 1.0], [1.0, 2.0, 0.0]]}"#,
    )
    .unwrap();
    let out = run(&["ba", "--instance", path_str(&reduced), "--tile", "--cross-check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out.stdout);
    assert_eq!(report["phase"], "Active");
    assert!(report["cross_check"]["gap"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report["policy"][0].as_array().unwrap().len(), 2);
}

#[test]
fn reproduce_ghn_suite_passes() {
    let out = run(&["reproduce", "--suite", "ghn"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.starts_with("PASS [ 1] ghn-reproduction"));
}

#[test]
fn threads_flag_and_env() {
    let out = run(&["--threads", "2", "solve", "--generate", "ghn"]);
    assert!(out.status.success());
    let out = bin()
        .args(["solve", "--generate", "ghn"])
        .env("ENTROPIC_LP_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
}
