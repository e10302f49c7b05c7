use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_schrodinger-lab");

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env("SCHRODINGER_LAB_WORKERS", "1").output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("lab.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const MINIMAL: &str = "[[experiment]]\ninequality = \"strichartz_5_1\"\nmodel = \"circle\"\n";

#[test]
fn minimal_config_passes_and_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out = run(&["strichartz", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() >= 3);
    assert!(rows.iter().all(|r| r.starts_with("strichartz_5_1,circle,") && r.ends_with(",true")));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn divergent_constant_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[experiment]]\ninequality = \"sphere_sec4\"\nmodel = \"sphere2\"\nalpha = 0.4\n");
    let out = run(&["maximal", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("divergent constant"));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[experiment]]\ninequality = \"strichartz_5_1\"\nmodel = \"circle\"\ncutof = 8\n");
    let out = run(&["strichartz", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cutof") && err.contains("unknown field"), "{err}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 11\n[[experiment]]\ninequality = \"strichartz_5_1\"\nmodel = \"circle\"\n\n[[experiment]]\ninequality = \"maximal_5_2\"\nmodel = \"circle\"\ntrials = 2\n",
    );
    for out in ["a", "b"] {
        let o = run(&["report", "--config", &cfg, "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a/report.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/report.csv")).unwrap();
    assert_eq!(a, b);
    let o = run(&["report", "--config", &cfg, "--out", "c", "--seed", "12"], dir.path());
    assert!(o.status.success());
    assert_ne!(std::fs::read(dir.path().join("c/report.csv")).unwrap(), a);
}

#[test]
fn spectra_and_evolve_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectra", "--model", "sphere2", "--cutoff", "3", "--out", "s"], dir.path());
    assert!(o.status.success());
    let modes = std::fs::read_to_string(dir.path().join("s/modes.csv")).unwrap();
    assert_eq!(modes.lines().count(), 1 + 9);
    let o = run(&["evolve", "--model", "torus2", "--cutoff", "3", "--times", "0,0.5", "--out", "e"], dir.path());
    assert!(o.status.success());
    assert!(dir.path().join("e/field.csv").exists() && dir.path().join("e/samples.csv").exists());
    let o = run(&["evolve", "--model", "hyperbolic", "--times", "0", "--out", "h"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("h/profile_0.csv").exists());
}

#[test]
fn slow_models_are_skipped_without_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[experiment]]\ninequality = \"torus_6_3\"\nmodel = \"torus3\"\n");
    let o = run(&["strichartz", "--config", &cfg, "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("SKIP"));
}

#[test]
fn bad_worker_count_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["spectra", "--out", "x"])
        .current_dir(dir.path())
        .env("SCHRODINGER_LAB_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
