use std::path::Path;
use std::process::Command;

use serde_json::Value;
use specball::adjointfields::GeneratorId;
use specball::flows::{Atom, AutomorphismWord, ComplexMatrix};
use specball::polyring::Polynomial;

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_specball")).args(args).output().expect("binary runs");
    let code = out.status.code().expect("exit code");
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn ball_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.2, 0.3], &[-0.1, 0.4]]).unwrap()
}

#[test]
fn tables_envelope() {
    let (code, v) = run(&["tables", "--n", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "tables");
    assert_eq!(v["status"], "ok");
    let (code, v) = run(&["tables", "--n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["generators"], 3);
}

#[test]
fn usage_and_budget_exit_codes() {
    assert_eq!(run(&["verify", "--id", "nope"]).0, 2);
    assert_eq!(run(&["kernels", "--m", "4..1"]).0, 2);
    assert_eq!(run(&["no-such-command"]).0, 2);
    let (code, v) = run(&["generate", "--n", "3", "--max-degree", "6", "--budget-ms", "1"]);
    assert_eq!(code, 3);
    assert_eq!(v["status"], "incomplete");
}

#[test]
fn verify_reports_failures() {
    let (code, v) = run(&["verify", "--id", "cross-term"]);
    assert_eq!(code, 0, "{v}");
    let (code, _) = run(&["verify", "--id", "d1"]);
    assert_eq!(code, 5);
}

#[test]
fn orbit_fibre_check_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = ball_matrix();
    let m = write(dir.path(), "a.json", &a.to_json());
    let word = AutomorphismWord::new(vec![
        Atom::overshear(GeneratorId::Theta(1, 2), Polynomial::x(2, 1, 1), num_complex::Complex64::new(0.3, 0.1))
            .unwrap(),
        Atom::Transpose,
    ]);
    let w = write(dir.path(), "w.json", &word.to_json());
    let out = dir.path().join("out.json");
    let out_s = out.to_str().unwrap();
    let (code, _) = run(&["orbit", "--word", &w, "--matrix", &m, "--fibre-check", "--out", out_s]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["atoms"], 2);
    assert!(v["result"]["fibre_drift"].as_f64().unwrap() < 1e-8);
    assert!(!dir.path().join("out.json.tmp").exists());

    let empty = write(dir.path(), "empty.json", "[]");
    let (code, v) = run(&["orbit", "--word", &empty, "--matrix", &m]);
    assert_eq!(code, 0);
    assert_eq!(ComplexMatrix::from_json(&v["result"]["output"].to_string()).unwrap(), a);
}

#[test]
fn orbit_rejects_points_outside_the_ball() {
    let dir = tempfile::tempdir().unwrap();
    let big = ComplexMatrix::from_real_rows(&[&[1.5, 0.0], &[0.0, 0.1]]).unwrap();
    let m = write(dir.path(), "a.json", &big.to_json());
    let w = write(dir.path(), "w.json", "[]");
    let (code, v) = run(&["orbit", "--word", &w, "--matrix", &m]);
    assert_eq!(code, 4);
    assert!(v["result"]["error"].as_str().unwrap().contains("not in spectral ball"));
}
