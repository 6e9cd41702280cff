use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_framelab");

fn run(args: &[&str]) -> Output {
    run_with_env(args, &[])
}

fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for var in ["FRAMELAB_SAMPLES", "FRAMELAB_SEED", "FRAMELAB_TOL_IDENTITY", "FRAMELAB_TOL_VERDICT", "FRAMELAB_OUT", "FRAMELAB_FORMAT"] {
        cmd.env_remove(var);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_born_is_linear() {
    let out = run(&["verify", "born:0,0,0.6", "--samples", "20000"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["verdict"]["verdict"], "linear");
    assert_eq!(v["expected"], "linear");
    let rho = v["verdict"]["rho"]["bloch"].as_array().unwrap();
    assert!((rho[2].as_f64().unwrap() - 0.6).abs() < 1e-9);
    assert!(rho[0].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn verify_cubic_is_nonlinear() {
    let out = run(&["verify", "odd:0,0,1:cubic", "--samples", "20000"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["verdict"]["verdict"], "nonlinear");
    let residual = v["fit"]["rms_residual"].as_f64().unwrap();
    assert!((residual - 1.0 / 175f64.sqrt()).abs() < 2e-3, "{residual}");
    assert_eq!(v["eigenstate"]["pass"], true);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["verify", "odd:0,0,2:cubic"][..],
        &["verify", "odd:0,0,1:cosine"],
        &["verify", "born:0,0"],
        &["verify", "born:0,0,0.6", "--samples", "0"],
        &["verify", "born:0,0,0.6", "--tol-verdict", "-1"],
        &["verify", "born:0,0,0.6", "--samples", "500"],
        &["frobnicate"],
        &["scan", "born:0,0,1", "--points", "1"],
    ] {
        let out = run(args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn unexpected_outcome_exits_1() {
    // with a loose verdict threshold the cubic frame passes as linear
    let out = run(&["verify", "odd:0,0,1:cubic", "--samples", "20000", "--tol-verdict", "0.5"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn claims_pass_on_defaults() {
    let out = run(&["claims"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let row = |name: &str| rows.iter().find(|r| r["claim"] == name).unwrap();
    let number = |row: &Value, name: &str| {
        row["numbers"].as_array().unwrap().iter().find(|n| n["name"] == name).unwrap()["value"].as_f64().unwrap()
    };
    let cx = row("continuous counterexample with eigenstate");
    assert!((number(cx, "rms_residual") - 0.0756).abs() < 2e-3);
    assert_eq!(number(cx, "eigenstate_value"), 1.0);
    assert!(number(row("d=3 boundary"), "witness_deviation") > 0.01);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["claims", "--samples", "20000", "--seed", "9"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    let other = run(&["claims", "--samples", "20000", "--seed", "10"]);
    assert_ne!(first.stdout, other.stdout);

    let a = run(&["verify", "odd:0.6,0,0.8:sine", "--samples", "20000", "--format", "table"]);
    let b = run(&["verify", "odd:0.6,0,0.8:sine", "--samples", "20000", "--format", "table"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("nonlinear") && text.trim_end().ends_with("PASS"));
}

#[test]
fn environment_mirrors_flags() {
    let flag = run(&["verify", "odd:0,0,1:quintic", "--samples", "20000", "--seed", "7"]);
    let env = run_with_env(
        &["verify", "odd:0,0,1:quintic"],
        &[("FRAMELAB_SAMPLES", "20000"), ("FRAMELAB_SEED", "7")],
    );
    assert_eq!(code(&env), 0);
    assert_eq!(flag.stdout, env.stdout);
    // an explicit flag wins over the environment
    let both = run_with_env(&["verify", "odd:0,0,1:quintic", "--seed", "7"], &[("FRAMELAB_SAMPLES", "20000"), ("FRAMELAB_SEED", "8")]);
    assert_eq!(flag.stdout, both.stdout);
    let table = run_with_env(&["verify", "born:0,0,0"], &[("FRAMELAB_SAMPLES", "20000"), ("FRAMELAB_FORMAT", "table")]);
    assert!(String::from_utf8(table.stdout).unwrap().starts_with("frame"));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let to_file = run(&["verify", "born:0.1,0.2,0.3", "--samples", "20000", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&to_file), 0);
    assert!(to_file.stdout.is_empty());
    let to_stdout = run(&["verify", "born:0.1,0.2,0.3", "--samples", "20000"]);
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

fn csv(text: &[u8]) -> (String, Vec<Vec<f64>>) {
    let text = String::from_utf8(text.to_vec()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn angle_scans() {
    let out = run(&["scan", "odd:0,0,1:cubic", "--points", "3"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv(&out.stdout);
    assert_eq!(header, "angle,probability");
    assert_eq!(rows[0], vec![0.0, 1.0]);
    assert!((rows[1][1] - 0.5).abs() < 1e-15);

    let (_, rows) = csv(&run(&["scan", "born:0,0,1"]).stdout);
    assert_eq!(rows.len(), 181);
    assert_eq!(rows[180][0], std::f64::consts::PI);
    assert!(rows[180][1].abs() < 1e-15);
}

#[test]
fn residual_scan_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("residual.csv");
    let args = ["scan", "odd:0,0,1:cubic", "--kind", "residual", "--samples", "100000", "--out", path.to_str().unwrap()];
    assert_eq!(code(&run(&args)), 0);
    let first = std::fs::read(&path).unwrap();
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(std::fs::read(&path).unwrap(), first);
    let (header, rows) = csv(&first);
    assert_eq!(header, "samples,rms_residual");
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![100.0, 1000.0, 10_000.0, 100_000.0]);
    assert!((rows[3][1] - 1.0 / 175f64.sqrt()).abs() < 2e-3);
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("scan.csv");
    let out = run(&["scan", "born:0,0,1", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!Path::new(&path).exists());
}
