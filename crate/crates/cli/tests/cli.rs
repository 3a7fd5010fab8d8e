use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn run(dir: &Path, config: &Value, args: &[&str]) -> Output {
    let path = dir.join("run.json");
    std::fs::write(&path, config.to_string()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cmarkov"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn plane() -> Value {
    json!({"kind": "rect", "dim": 2})
}

#[test]
fn star_correspondence_passes() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &json!({"version": 1, "star": {"s": 1, "t": 1, "h": 1, "k": 1}}), &["verify-star"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "verify-star");
    assert_eq!(r["passed"], true);
}

#[test]
fn sampling_without_a_seed_is_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"version": 1, "family": plane(), "sets": [[1, 1]]});
    let out = run(dir.path(), &cfg, &["sample-fdd"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    assert!(out.stdout.is_empty());
}

#[test]
fn ck_reports_one_record_per_split() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "version": 1,
        "family": plane(),
        "increment": {"outer": [2, 2], "parts": [[1, 2], [2, 1]]},
        "splits": [[1.5, 2], [2, 1.5], [1.5, 1.5], [2, 1.2]],
        "samples": 500
    });
    let out = run(dir.path(), &cfg, &["verify-ck"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let recs = r["reports"].as_array().unwrap();
    assert_eq!(recs.len(), 4);
    assert!(recs.iter().all(|x| x["passed"] == true && x["exact"] == true));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "version": 1,
        "family": plane(),
        "kernel": {"kind": "ou", "alpha": 2, "lambda": 0.5, "sigma": 1},
        "sets": [[1, 1], [2, 0.5], [0.5, 2]],
        "replicates": 50
    });
    let a = run(dir.path(), &cfg, &["sample-fdd", "--seed", "11"]);
    let b = run(dir.path(), &cfg, &["sample-fdd", "--seed", "11"]);
    let c = run(dir.path(), &cfg, &["sample-fdd", "--seed", "12"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn csv_has_a_header_and_one_row_per_replicate() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"version": 1, "family": plane(), "sets": [[2, 1], [1, 1]], "seed": 3});
    let out = run(dir.path(), &cfg, &["sample-fdd", "--replicates", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "\"A(2.0,1.0)\",\"A(1.0,1.0)\"");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 2));
}

#[test]
fn out_flag_writes_json_samples_to_a_file() {
    let dir = TempDir::new().unwrap();
    let dest = dir.path().join("samples.json");
    let cfg = json!({"version": 1, "family": plane(), "sets": [[1, 1]], "seed": 5, "replicates": 2});
    let out = run(dir.path(), &cfg, &["sample-fdd", "--json", "--out", dest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let table: Value = serde_json::from_str(&std::fs::read_to_string(dest).unwrap()).unwrap();
    assert_eq!(table["seed"], 5);
    assert_eq!(table["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn grid_samples_cover_every_corner() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"version": 1, "family": plane(), "grid": [[0.5, 1], [0.5, 1, 1.5]], "seed": 1});
    let out = run(dir.path(), &cfg, &["sample-grid"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap().split(',').count(), 12);
}

#[test]
fn moments_match_the_sheet_covariance() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"version": 1, "family": plane(), "sets": [[1, 1], [2, 0.5]]});
    let r = report(&run(dir.path(), &cfg, &["moments"]));
    let cov = &r["cov"];
    assert!((cov[0][1].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((cov[1][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn gaussian_property_checks_pass() {
    let dir = TempDir::new().unwrap();
    let base = json!({
        "version": 1,
        "family": plane(),
        "kernel": {"kind": "ou", "alpha": 2, "lambda": 1, "sigma": 1},
        "increment": {"outer": [2, 2], "parts": [[1, 2], [2, 1]]},
        "extras": [[0.5, 0.5], [1, 0.3]],
        "boundary": [[1, 2], [2, 1]],
        "inside": [[0.5, 1.5]],
        "outside": [[2, 2], [1.5, 1.8]],
        "u": [1, 2],
        "v": [2, 1],
        "sets": [[2, 2], [1.5, 1.5]],
        "coefs": [1, -0.5],
        "flow": [[0.5, 0.5], [1, 1], [2, 2]],
        "samples": 2000
    });
    for cmd in ["verify-cmarkov", "verify-sharp", "verify-commute", "verify-flow"] {
        let out = run(dir.path(), &base, &[cmd]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(report(&out)["passed"], true, "{cmd}");
    }
}

#[test]
fn shift_check_rejects_an_inhomogeneous_measure() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "version": 1,
        "family": {"kind": "rect", "dim": 2, "measure": {"type": "weighted", "weights": [1, 2.5]}},
        "u": [0.5, 0.7],
        "sets": [[1, 1]],
        "samples": 500
    });
    let out = run(dir.path(), &cfg, &["verify-shift"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shift_check_passes_on_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "version": 1,
        "family": {"kind": "rect", "dim": 1},
        "u": [0.5],
        "sets": [[0.5], [1.5]],
        "samples": 2000,
        "seed": 4
    });
    let out = run(dir.path(), &cfg, &["verify-shift"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_invocations_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"version": 1});
    assert_eq!(run(dir.path(), &cfg, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &json!({"version": 9}), &["verify-star"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &cfg, &["verify-ck"]).status.code(), Some(1));
    let help = Command::new(env!("CARGO_BIN_EXE_cmarkov")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn failing_check_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "version": 1,
        "family": {"kind": "rect", "dim": 1},
        "kernel": {"kind": "ou", "alpha": 2, "lambda": 1, "sigma": 1},
        "feller": {"rhos": [0.5, 0.25], "slack": -1}
    });
    let out = run(dir.path(), &cfg, &["feller"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["passed"], false);
}
