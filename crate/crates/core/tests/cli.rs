use std::path::PathBuf;
use std::process::{Command, Output};

use nonlocal::numerics::CMatrix;
use nonlocal::sequential::SequentialQuantumStrategy;
use serde_json::Value;

fn games_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../games")
}

fn game(name: &str) -> String {
    games_dir().join(format!("{name}.json")).display().to_string()
}

fn witness() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/degree2_witness.json").display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal")).args(args).output().expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classical_value_with_config_echo() {
    let v = json_ok(&["value", &game("chsh"), "--kind", "classical"]);
    assert_eq!(v["value"], 0.75);
    assert_eq!(v["config"]["kind"], "classical");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn npa_level_one_chsh() {
    let v = json_ok(&["value", &game("chsh"), "--kind", "qc", "--npa-level", "1"]);
    let oracle = (2.0 + 2f64.sqrt()) / 4.0;
    assert!((v["value"].as_f64().unwrap() - oracle).abs() < 1e-6);
}

#[test]
fn catalog_names_resolve() {
    let v = json_ok(&["value", "magic-square", "--kind", "ns"]);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-7);
}

#[test]
fn missing_file_is_usage_error() {
    let out = run(&["value", "missing.json", "--kind", "classical"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(run(&["value", "chsh", "--kind", "best"]).status.code(), Some(2));
    assert_eq!(run(&["value", "chsh", "--kind", "qc", "--npa-level", "9"]).status.code(), Some(2));
    assert_eq!(run(&["compile", "run", "chsh", "--prover", "honest"]).status.code(), Some(2));
    assert_eq!(run(&["compile", "run", "chsh", "--prover", "constant-7", "--exact"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn unsupported_circuit_is_solver_failure() {
    let out = run(&["compile", "run", &game("magic-square"), "--prover", "honest", "--backend", "clifford", "--exact"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not supported"));
}

#[test]
fn battery_secure_and_insecure() {
    let g = game("chsh");
    let v = json_ok(&["compile", "battery", &g, "--backend", "ideal", "--lambda", "8", "--seed", "1"]);
    assert!(v["max"].as_f64().unwrap() <= 0.853554);
    assert!(v["key_stealer"].is_null());
    let v = json_ok(&["compile", "battery", &g, "--backend", "ideal", "--lambda", "8", "--insecure", "--seed", "1"]);
    assert!((v["key_stealer"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn exact_honest_run() {
    let v = json_ok(&["compile", "run", &game("chsh"), "--prover", "honest", "--exact", "--lambda", "6"]);
    assert!((v["value"].as_f64().unwrap() - (2.0 + 2f64.sqrt()) / 4.0).abs() < 1e-9);
    assert!(v["strong_nonsig_residual_degree3"].as_f64().unwrap() < 1e-9);
}

#[test]
fn monte_carlo_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let t1 = dir.path().join("a.jsonl");
    let t2 = dir.path().join("b.jsonl");
    let base = ["compile", "run", "chsh", "--prover", "honest", "--trials", "300", "--seed", "9"];
    let a = run(&[&base[..], &["--threads", "1", "--transcript", t1.to_str().unwrap()]].concat());
    let b = run(&[&base[..], &["--threads", "3", "--transcript", t2.to_str().unwrap()]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let lines = std::fs::read_to_string(&t1).unwrap();
    assert_eq!(lines.lines().count(), 300);
    assert_eq!(lines, std::fs::read_to_string(&t2).unwrap());
    let again = run(&[&base[..], &["--threads", "1", "--transcript", t1.to_str().unwrap()]].concat());
    assert_eq!(a.stdout, again.stdout);
}

#[test]
fn degree_witness_check() {
    let w = witness();
    let d1 = json_ok(&["seq", "check", &w, "--degree", "1"]);
    let d2 = json_ok(&["seq", "check", &w, "--degree", "2"]);
    assert_eq!(d1["residual"], 0.0);
    assert!(d2["residual"].as_f64().unwrap() > 0.01);
}

#[test]
fn witness_is_not_convertible() {
    let out = run(&["seq", "convert", &witness()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn convert_writes_tensor_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.json");
    let tensor = dir.path().join("tensor.json");
    let diag = |a: f64, b: f64| CMatrix::diag_real(&[a, b]);
    let s = SequentialQuantumStrategy::new(
        vec![vec![diag(0.25, 0.25), diag(0.25, 0.25)], vec![diag(0.5, 0.0), diag(0.0, 0.5)]],
        vec![vec![diag(1.0, 0.0), diag(0.0, 1.0)], vec![diag(0.3, 0.6), diag(0.7, 0.4)]],
    )
    .unwrap();
    std::fs::write(&seq, s.to_json()).unwrap();
    let v = json_ok(&["seq", "convert", seq.to_str().unwrap(), "--method", "block-purify", "--output", tensor.to_str().unwrap()]);
    assert!(v["correlation_deviation"].as_f64().unwrap() < 1e-9, "{v}");
    let q: nonlocal::values::QuantumStrategy = serde_json::from_str(&std::fs::read_to_string(&tensor).unwrap()).unwrap();
    q.validate(1e-9).unwrap();
}

#[test]
fn chsh_residual_of_honest_extraction() {
    let v = json_ok(&["selftest", "chsh-residual"]);
    assert!(v["residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn blockenc_verify_small() {
    let v = json_ok(&["blockenc", "verify", "--dim", "4", "--degree", "2", "--families", "3", "--seed", "1"]);
    assert_eq!(v["monomials_checked"], 3 * (4 + 16));
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-7);
    assert_eq!(run(&["blockenc", "verify", "--dim", "3"]).status.code(), Some(1));
}

/// Required keys from the published schema, top level and per command.
fn required_keys(command: &str) -> Vec<String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas/cli-output.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let names = |v: &Value| -> Vec<String> { v.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect() };
    let mut keys = names(&schema["required"]);
    for clause in schema["allOf"].as_array().unwrap() {
        if clause["if"]["properties"]["command"]["const"] == command {
            keys.extend(names(&clause["then"]["required"]));
        }
    }
    keys
}

#[test]
fn outputs_carry_schema_keys() {
    let w = witness();
    let runs: Vec<Vec<&str>> = vec![
        vec!["value", "chsh", "--kind", "q", "--restarts", "2"],
        vec!["compile", "run", "chsh", "--prover", "echo", "--trials", "20"],
        vec!["compile", "battery", "chsh", "--lambda", "3"],
        vec!["seq", "check", &w],
        vec!["selftest", "chsh-residual", "--lambda", "3"],
        vec!["blockenc", "verify", "--families", "1", "--degree", "1"],
    ];
    for args in runs {
        let v = json_ok(&args);
        let command = v["command"].as_str().unwrap().to_string();
        for k in required_keys(&command) {
            assert!(v.get(&k).is_some(), "{command} output lacks {k}");
        }
    }
}
