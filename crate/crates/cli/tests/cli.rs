use std::process::Command as Proc;

use clap::Parser;
use permsys_cli::{run, Cli, Outcome};
use serde_json::Value;

fn call(args: &[&str]) -> (Outcome, Vec<Value>) {
    let cli = Cli::try_parse_from(std::iter::once("permsys").chain(args.iter().copied())).expect("arguments parse");
    let mut buf = Vec::new();
    let outcome = run(&cli, &mut buf).expect("command runs");
    let rows = String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is JSON"))
        .collect();
    (outcome, rows)
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_permsys"))
}

#[test]
fn check_perm_identity() {
    let (o, rows) = call(&["check-perm", "--field", "3", "--system", "(x,y)"]);
    assert_eq!(o.exit_code(), 0);
    assert_eq!(rows[0]["is_perm"], true);
}

#[test]
fn hermite_reports_tuple() {
    let (o, rows) = call(&["hermite", "--field", "3", "--system", "(x^2+y^2, x*y)"]);
    assert_eq!(o.exit_code(), 0);
    assert_eq!(rows[0]["is_perm"], false);
    assert!(rows[0]["witness"]["hermite_tuple"].is_array());
    assert_eq!(rows[0]["agree"], true);
}

#[test]
fn classify_quad_records() {
    let (o, rows) = call(&["classify-quad", "--field", "5", "--coeffs", "0,0,1,1,0,0,0,0,0,1"]);
    assert_eq!(o.exit_code(), 0);
    assert_eq!(rows[0]["case"], "Odd-ii");
    assert_eq!(rows[0]["canonical"]["class"], "(x,y)");
    let (_, rows) = call(&["classify-quad", "--field", "2^3", "--coeffs", "0,0,1,1,0,0,0,0,0,1"]);
    assert_eq!(rows[0]["case"], "Even-iv");
    assert_eq!(rows[0]["coeffs"][2], "0x1");
}

#[test]
fn scan_quad_exhaustive_f2() {
    let (o, rows) = call(&["scan-quad", "--field", "2", "--exhaustive"]);
    assert_eq!(rows.len(), 1024);
    assert!(rows.iter().all(|r| r["agree"] == true));
    assert_eq!(o.exit_code(), 0);
}

#[test]
fn scan_quad_sampled_is_seeded() {
    let args = ["scan-quad", "--field", "7", "--samples", "200", "--seed", "9"];
    let (_, a) = call(&args);
    let (_, b) = call(&args);
    assert_eq!(a, b);
    let (_, c) = call(&["scan-quad", "--field", "7", "--samples", "200", "--seed", "10", "--workers", "1"]);
    assert_ne!(a, c);
}

#[test]
fn classify_and_scan_homog3() {
    let (o, rows) = call(&["classify-homog3", "--field", "5", "--coeffs", "1,0,1,1,0,1"]);
    assert_eq!(o.exit_code(), 0);
    assert_eq!(rows[0]["agree"], true);
    let (o, rows) = call(&["scan-homog3", "--field", "2", "--exhaustive"]);
    assert_eq!(rows.len(), 16);
    assert_eq!(o.exit_code(), 0);
}

#[test]
fn scan_binomial_q5() {
    let (o, rows) = call(&["scan-binomial", "--field", "5"]);
    assert_eq!(rows.len(), 25);
    for key in ["q", "a1", "a2", "predicted", "case", "oracle", "agree"] {
        assert!(rows.iter().all(|r| r.get(key).is_some()), "{key}");
    }
    // The literal prediction misses a = 1 and (2, 2), (2, 3); the run must say so.
    assert!(rows.iter().any(|r| r["agree"] == false));
    assert_eq!(o.exit_code(), 1);
}

#[test]
fn scan_binomial_even_flags_zero_row() {
    let (o, rows) = call(&["scan-binomial", "--field", "8", "--even"]);
    assert_eq!(rows.len(), 64);
    let zero = rows.iter().find(|r| r["a1"] == "0x0" && r["a2"] == "0x0").unwrap();
    assert_eq!(zero["flagged"], true);
    assert_eq!(o.exit_code(), 1);
    assert!(Cli::try_parse_from(["permsys", "scan-binomial", "--field", "5", "--even"])
        .map(|c| run(&c, &mut Vec::new()).is_err())
        .unwrap());
}

#[test]
fn verify_equiv_accepts_and_rejects() {
    let w = r#"{"steps":[{"relabel":[2,1]}]}"#;
    let (o, rows) = call(&["verify-equiv", "--field", "3", "--from", "(x, y + x^2)", "--to", "(y, x + y^2)", "--witness", w]);
    assert_eq!(rows[0]["valid"], true);
    assert_eq!(o.exit_code(), 0);
    let (o, rows) = call(&["verify-equiv", "--field", "3", "--from", "(x, y + x^2)", "--to", "(x, y)", "--witness", w]);
    assert_eq!(rows[0]["valid"], false);
    assert_eq!(o.exit_code(), 1);
}

#[test]
fn conjecture_scan_sampled_f5() {
    let (o, rows) = call(&["conjecture-scan", "--field", "5", "--samples", "500"]);
    let s = &rows.last().unwrap()["summary"];
    assert_eq!(s["systems"], 500);
    assert_eq!(s["unresolved"], 0);
    assert_eq!(o.exit_code(), 0);
    assert!(Cli::try_parse_from(["permsys", "conjecture-scan", "--field", "4"])
        .map(|c| run(&c, &mut Vec::new()).is_err())
        .unwrap());
}

#[test]
fn field_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.toml");
    std::fs::write(&path, "p = 2\nm = 2\nmodulus = [1, 1, 1]\n").unwrap();
    let (_, rows) = call(&["check-perm", "--field-config", path.to_str().unwrap(), "--system", "(x^2, y)"]);
    assert_eq!(rows[0]["is_perm"], true);
}

#[test]
fn binary_exit_codes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let st = bin()
            .args(["scan-quad", "--field", "5", "--samples", "300", "--workers", workers, "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(st.success());
        std::fs::read(path).unwrap()
    };
    assert_eq!(out("a.jsonl", "4"), out("b.jsonl", "4"));
    assert_eq!(out("c.jsonl", "1"), out("d.jsonl", "1"));

    let st = bin().args(["scan-binomial", "--field", "5"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert_eq!(String::from_utf8(st.stdout).unwrap().lines().count(), 25);

    let st = bin().args(["check-perm", "--system", "(x, y)"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin().args(["check-perm", "--field", "6", "--system", "(x, y)"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin()
        .env("PERMSYS_BUDGET", "10")
        .args(["check-perm", "--field", "5", "--system", "(x, y)"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8(st.stderr).unwrap().contains("budget"));
}
