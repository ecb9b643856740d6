//! Runs the installed binary end to end: exit codes, artifacts, and the
//! determinism of repeated runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run_in(dir: &Path, subcmd: &str, config_text: &str, extra: &[&str]) -> (Output, PathBuf) {
    let config = dir.join("run.toml");
    std::fs::write(&config, config_text).unwrap();
    let out_dir = dir.join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_fraclab"))
        .arg(subcmd)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .args(extra)
        .output()
        .unwrap();
    (output, out_dir)
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn solve_writes_profile_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\np = 2.0\ns = 0.5\nn = 64\n";
    let (out, dir) = run_in(tmp.path(), "solve", cfg, &["--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));

    let csv = read(&dir, "solve.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,delta,u,u_over_delta_s");
    assert_eq!(lines.len(), 65, "one header plus one row per node");
    let manifest = read(&dir, "run_manifest.txt");
    assert!(manifest.contains("solve.csv"), "{manifest}");
    assert!(manifest.contains("solver_converged = pass"), "{manifest}");

    let tmp2 = tempfile::tempdir().unwrap();
    let (out2, dir2) = run_in(tmp2.path(), "solve", cfg, &["--quiet"]);
    assert_eq!(out2.status.code(), Some(0));
    assert_eq!(csv, read(&dir2, "solve.csv"), "same config must give the same bytes");
}

#[test]
fn rejects_p_at_most_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\np = 0.5\ns = 0.5\nn = 64\n";
    let (out, _) = run_in(tmp.path(), "solve", cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("p must exceed 1"), "{}", stderr_of(&out));
}

#[test]
fn rejects_unknown_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\np = 2.0\ns = 0.5\nn = 64\nwidgets = 3\n";
    let (out, _) = run_in(tmp.path(), "solve", cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("widgets"), "{}", stderr_of(&out));
}

#[test]
fn eval_op_singular_needs_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\np = 1.5\ns = 0.9\nfield = \"halfspace_power\"\nprobes = [0.25]\n";
    let (out, _) = run_in(tmp.path(), "eval-op", cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("singular threshold"), "{}", stderr_of(&out));

    let tmp2 = tempfile::tempdir().unwrap();
    let (out2, dir2) = run_in(
        tmp2.path(),
        "eval-op",
        cfg,
        &["--override-singular-check", "--quiet"],
    );
    assert_eq!(out2.status.code(), Some(0), "{}", stderr_of(&out2));
    assert!(read(&dir2, "eval_op.csv").starts_with("x,value,error_bar,partial_0"));
}

#[test]
fn eval_op_annihilates_halfspace_power() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\np = 2.0\ns = 0.5\nfield = \"halfspace_power\"\nprobes = [0.5]\n";
    let (out, dir) = run_in(tmp.path(), "eval-op", cfg, &["--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let csv = read(&dir, "eval_op.csv");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let value: f64 = row[1].parse().unwrap();
    let bar: f64 = row[2].parse().unwrap();
    assert!(
        value.abs() <= 1e-4f64.max(bar),
        "the half-space power is a null field of its own exponent pair, got {value}"
    );
}

#[test]
fn solve_with_zero_source_returns_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\np = 2.0\ns = 0.5\nn = 32\nk = 0.0\n";
    let (out, dir) = run_in(tmp.path(), "solve", cfg, &["--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    for line in read(&dir, "solve.csv").lines().skip(1) {
        let u: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(u, 0.0, "zero source must keep the zero minimizer");
    }
}

#[test]
fn suite_reference_config_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\na = -1.0\nb = 1.0\np = 2.0\ns = 0.5\nn = 256\npairs = 4\n";
    let (out, dir) = run_in(tmp.path(), "suite", cfg, &["--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let csv = read(&dir, "suite_summary.csv");
    for line in csv.lines().skip(1) {
        let status = line.split(',').nth(1).unwrap();
        assert!(status == "pass" || status == "skip", "unexpected row: {line}");
    }
    assert!(csv.contains("closed_form,pass"), "{csv}");
    assert!(read(&dir, "run_manifest.txt").contains("status = pass"));
}

#[test]
fn failing_solve_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\np = 3.0\ns = 0.5\nn = 32\ntolerance = 1e-18\nmax_iterations = 50\n";
    let (out, dir) = run_in(tmp.path(), "solve", cfg, &["--quiet"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));
    assert!(read(&dir, "run_manifest.txt").contains("solver_converged = fail"));
}

#[test]
fn verify_comparison_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "domain = \"interval\"\np = 2.0\ns = 0.5\nn = 64\ncheck = \"comparison\"\npairs = 3\n";
    let (out, dir) = run_in(tmp.path(), "verify", cfg, &["--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let csv = read(&dir, "verify.csv");
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(csv.starts_with("pair,violation,allowance"));
}
