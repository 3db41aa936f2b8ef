use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hermitube(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hermitube")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let half = write(dir.path(), "half.json", r#"{"rank":1,"tube":false,"hrep":[{"n":[-1.0],"c":-1.0}]}"#);
    let out = hermitube(&["classify", &half]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["stein"], Value::Bool(true));

    let bx = write(
        dir.path(),
        "box.json",
        r#"{"rank":2,"tube":false,"hrep":[{"n":[-1,0],"c":-1},{"n":[0,-1],"c":-1},{"n":[1,0],"c":3},{"n":[0,1],"c":3}]}"#,
    );
    let out = hermitube(&["classify", &bx]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["stein"], Value::Bool(false));
    assert!(v["witness"]["direction"].is_array());

    let bad = write(dir.path(), "bad.json", r#"{"tube":false,"hrep":[]}"#);
    assert_eq!(hermitube(&["classify", &bad]).status.code(), Some(2));
    let extra = write(dir.path(), "extra.json", r#"{"rank":1,"tube":false,"hrep":[],"color":"red"}"#);
    assert_eq!(hermitube(&["classify", &extra]).status.code(), Some(2));
    assert_eq!(hermitube(&["classify", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn envelope_of_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = write(dir.path(), "cloud.json", r#"{"rank":2,"tube":false,"cloud":[[1,3],[3,1]]}"#);
    let outdir = dir.path().join("env");
    let out = hermitube(&["envelope", &cloud, "--out", outdir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["facets"], Value::from(3));
    assert!(outdir.join("boundary.csv").exists());

    // The written hull is Stein and its envelope is itself.
    let hull = outdir.join("envelope.json");
    let hull = hull.to_str().unwrap();
    assert_eq!(hermitube(&["classify", hull]).status.code(), Some(0));
    let again = hermitube(&["envelope", hull]);
    assert_eq!(json(&again)["hrep"], json(&out)["hrep"]);

    let line = write(dir.path(), "line.json", r#"{"rank":1,"tube":false,"cloud":[[1.5],[2.5]]}"#);
    let v = json(&hermitube(&["envelope", &line]));
    assert_eq!(v["hrep"].as_array().unwrap().len(), 1);
    assert_eq!(v["hrep"][0]["c"].as_f64(), Some(-1.5));
}

#[test]
fn exhaust_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let half = write(dir.path(), "half.json", r#"{"rank":1,"tube":false,"hrep":[{"n":[-1.0],"c":-1.0}]}"#);
    let outdir = dir.path().join("ex");
    let out = hermitube(&["exhaust", &half, "--n-max", "4", "--out", outdir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["levels"].as_array().unwrap().len(), 3);
    assert_eq!(fs::read_dir(&outdir).unwrap().count(), 3);

    let one = hermitube(&["exhaust", &half, "--n-max", "1"]);
    assert_eq!(json(&one)["levels"].as_array().unwrap().len(), 1);

    let interval = write(dir.path(), "int.json", r#"{"rank":1,"tube":false,"hrep":[{"n":[-1.0],"c":-1.0},{"n":[1.0],"c":2.0}]}"#);
    let out = hermitube(&["exhaust", &interval]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn verify_suites() {
    let out = hermitube(&["verify", "--model", "sp:2", "--suite", "potential"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let b = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "constant_b").unwrap();
    assert_eq!(b["pass"], Value::Bool(true));
    let got: f64 = b["detail"].as_str().unwrap().trim_start_matches("b = ").parse().unwrap();
    assert!((got - 12.0).abs() < 1e-9);

    let out = hermitube(&["verify", "--model", "sl2", "--suite", "structure"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["checks"].as_array().unwrap().iter().any(|c| c["name"] == "cartan_brackets_2_delta_e"));

    let out = hermitube(&["verify", "--model", r#"{"family":"su","p":2,"q":3}"#, "--suite", "siegel"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["checks"].as_array().unwrap().iter().any(|c| c["name"] == "orbit_n_projection_in_shifted_cone"));

    assert_eq!(hermitube(&["verify", "--model", "sl2", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(hermitube(&["verify", "--model", "so:3", "--suite", "structure"]).status.code(), Some(2));
    assert_eq!(hermitube(&["verify", "--suite", "structure"]).status.code(), Some(2));
    // An impossible tolerance turns residual checks into failures.
    let out = hermitube(&["verify", "--model", "sp:2", "--suite", "potential", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = hermitube(&["verify", "--model", "su:2,3", "--suite", "all", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let out = Command::new(env!("CARGO_BIN_EXE_hermitube"))
        .args(["verify", "--model", "su:2,3", "--suite", "all", "--seed", "7"])
        .env("HERMITUBE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.stdout, fs::read(&a).unwrap());
}

#[test]
fn potential_eval_values() {
    let out = hermitube(&["potential-eval", "--model", "sl2", "--y", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rho = v["points"][0]["rho_hat"].as_f64().unwrap();
    assert!((rho - (1.0_f64 / 9.0).ln()).abs() < 1e-12);

    let out = hermitube(&["potential-eval", "--model", "sp:2", "--y", "2,3", "--c", "-1.5", "--d", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|t| t.parse().unwrap()).collect();
    assert!((row[2] - (1.0_f64 / 216.0).ln()).abs() < 1e-12);
    assert!((row[3] - (row[2] - 4.5 + 2.0)).abs() < 1e-12);

    assert_eq!(hermitube(&["potential-eval", "--model", "su:2,3", "--y", "1,1", "--c", "1"]).status.code(), Some(2));
    assert_eq!(hermitube(&["potential-eval", "--model", "sp:2", "--y", "1,-1"]).status.code(), Some(2));
}
