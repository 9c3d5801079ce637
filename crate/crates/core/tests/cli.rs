use std::collections::BTreeSet;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grover-cqed")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&stdout(&out)).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn csv_rows(text: &str) -> Vec<(f64, f64)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("param,fidelity"));
    lines
        .map(|l| {
            let (p, f) = l.split_once(',').unwrap();
            (p.parse().unwrap(), f.parse().unwrap())
        })
        .collect()
}

#[test]
fn grover_ideal_schema_and_values() {
    let v = json(&["grover-ideal", "--target", "3"]);
    assert_eq!(keys(&v), set(&["target", "probabilities"]));
    assert_eq!(v["target"], 3);
    let probs: Vec<f64> = v["probabilities"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(probs, vec![0.0, 0.0, 0.0, 1.0]);

    let v = json(&["grover-ideal", "--target", "0"]);
    let probs: Vec<f64> = v["probabilities"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(probs, vec![1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn invalid_target_is_usage_error() {
    let out = run(&["grover-ideal", "--target", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn simulate_schema_and_defaults() {
    let v = json(&["simulate"]);
    assert_eq!(
        keys(&v),
        set(&["target", "fidelity", "populations", "leaked_photon_probability", "gate_time_s", "total_time_s"])
    );
    assert_eq!(keys(&v["populations"]), set(&["g1g2", "g1i2", "e1g2", "e1i2"]));
    assert_eq!(v["target"], 3);
    let f = v["fidelity"].as_f64().unwrap();
    assert!(f > 0.9 && f < 1.0);
    assert!((v["gate_time_s"].as_f64().unwrap() - 1.6e-4).abs() < 1e-15);
    assert_eq!(v["populations"]["e1i2"].as_f64().unwrap(), f);
}

#[test]
fn simulate_effective_model_is_exact() {
    let v = json(&["simulate", "--collision_model", "effective", "--target", "1"]);
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn simulate_rejects_csv() {
    assert_eq!(run(&["simulate", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn single_point_sweep_matches_simulate() {
    let out = run(&["sweep-error", "--points", "0.02"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    let sim = json(&["simulate", "--epsilon", "0.02"]);
    assert!((rows[0].1 - sim["fidelity"].as_f64().unwrap()).abs() < 1e-10);
}

#[test]
fn error_sweep_is_monotone() {
    let out = run(&["sweep-error", "--points", "0,0.025,0.05"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 3);
    assert!(rows[0].1 >= rows[1].1 && rows[1].1 >= rows[2].1);
}

#[test]
fn detuning_sweep_increases() {
    let out = run(&["sweep-detuning", "--points", "4,20"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![4.0, 20.0]);
    assert!(rows[1].1 > rows[0].1);
}

#[test]
fn sweep_json_schema() {
    let v = json(&["sweep-detuning", "--points", "8", "--format", "json"]);
    assert_eq!(keys(&v), set(&["sweep", "points"]));
    assert_eq!(keys(&v["points"][0]), set(&["param", "fidelity"]));
}

#[test]
fn empty_sweep_is_usage_error() {
    assert_eq!(run(&["sweep-error", "--points", ""]).status.code(), Some(2));
    assert_eq!(run(&["sweep-detuning", "--points", "0.5"]).status.code(), Some(2));
}

#[test]
fn csv_output_is_bit_stable() {
    let a = run(&["sweep-error", "--points", "0,0.01,0.05"]);
    let b = run(&["sweep-error", "--points", "0,0.01,0.05"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "target = 0\nepsilon = 0.05\ncollision_model = \"effective\"\n").unwrap();
    let p = path.to_str().unwrap();

    let from_file = json(&["simulate", "--config", p]);
    assert_eq!(from_file["target"], 0);
    assert!((from_file["fidelity"].as_f64().unwrap() - 1.0).abs() > 1e-6);

    let overridden = json(&["simulate", "--config", p, "--target", "2", "--epsilon", "0"]);
    assert_eq!(overridden["target"], 2);
    assert!((overridden["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn unknown_config_key_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "targt = 1\n").unwrap();
    let out = run(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("targt"));
}

#[test]
fn feasibility_report_json() {
    let v = json(&["feasibility", "--format", "json", "--total_time", "2.5e-4"]);
    assert_eq!(v["flag"], "pass");
    assert_eq!(v["lambda_over_2pi"].as_f64().unwrap(), 3125.0);
    assert_eq!(v["velocity_m_per_s"].as_f64().unwrap(), 40.0);

    let v = json(&["feasibility", "--format", "json"]);
    assert_eq!(v["velocity_m_per_s"].as_f64().unwrap(), 31.25);
}

#[test]
fn feasibility_rejects_non_positive_inputs() {
    assert_eq!(run(&["feasibility", "--interaction_length", "0"]).status.code(), Some(2));
    assert_eq!(run(&["feasibility", "--photon_lifetime", "-1"]).status.code(), Some(2));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ideal.json");
    let out = run(&["grover-ideal", "--target", "2", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["target"], 2);
}
