use std::path::Path;
use std::process::{Command, Output};

use cforge::fieldlab::snapshot::write_immersion;
use cforge::{GridDomain, ImmersionField};
use cforge_cli::run::{FINAL_SNAPSHOT, SUMMARY_FILE, TRACE_FILE};

fn cforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cforge")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
n = 2
eps = 0.1
a = 1e6
stages = 1
[grid]
points_per_axis = 32
period = 6.283185307179586
[scenario]
kind = "manufactured-deficit"
perturbation = 0.1
[seeds]
master = 5
[ladder]
kind = "geometric"
base = 1.0
growth = 1.0
spiral_ratio = 1.5
corrugation_ratio = 1.5
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn audit_exit_codes() {
    let ok = cforge(&["audit", "--n", "3", "--eps", "0.02"]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("\"kind\":\"audit\""));
    let even = cforge(&["audit", "--n", "4", "--eps", "0.01"]);
    assert_eq!(code(&even), 0);
    assert!(stdout(&even).contains("theta = 0.190000000000"), "{}", stdout(&even));
    assert_eq!(code(&cforge(&["audit", "--n", "3", "--eps", "0.25"])), 3);
    assert_eq!(code(&cforge(&["audit", "--n", "2", "--eps", "0.01"])), 3);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&cforge(&["verify", "--suite", "nightly"])), 2);
    assert_eq!(code(&cforge(&["audit", "--n", "3"])), 2);
    assert_eq!(code(&cforge(&["run", "--config", "/nonexistent.toml"])), 2);
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("n = 2\n", ""));
    let o = cforge(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`n`"));
}

#[test]
fn mesh_of_a_flat_inclusion() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("u.snap");
    let u = ImmersionField::inclusion(&GridDomain::new(2, 16, std::f64::consts::TAU).unwrap(), 4, 1.0).unwrap();
    write_immersion(&snap, &u).unwrap();
    let out = dir.path().join("u.obj");
    let o = cforge(&["export-mesh", "--snapshot", snap.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let obj = std::fs::read_to_string(&out).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 289);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 512);
    let pca = cforge(&["export-mesh", "--snapshot", snap.to_str().unwrap(), "--projection", "pca3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&pca), 0);
}

#[test]
fn mesh_needs_two_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("u3.snap");
    let u = ImmersionField::inclusion(&GridDomain::new(3, 8, std::f64::consts::TAU).unwrap(), 6, 1.0).unwrap();
    write_immersion(&snap, &u).unwrap();
    let o = cforge(&["export-mesh", "--snapshot", snap.to_str().unwrap(), "--out", dir.path().join("x.obj").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    std::fs::write(&snap, "garbage").unwrap();
    let o = cforge(&["export-mesh", "--snapshot", snap.to_str().unwrap(), "--out", dir.path().join("x.obj").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut bytes = vec![];
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = cforge(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
        assert_eq!(summary["status"], "ok");
        let trace = std::fs::read_to_string(out.join(TRACE_FILE)).unwrap();
        assert!(trace.lines().count() > 0);
        bytes.push(std::fs::read(out.join(FINAL_SNAPSHOT)).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    // A different seed changes the perturbed metric and hence the result.
    let out = dir.path().join("seed9");
    assert_eq!(code(&cforge(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "9"])), 0);
    assert_ne!(std::fs::read(out.join(FINAL_SNAPSHOT)).unwrap(), bytes[0]);
}

#[test]
fn strict_mode_stops_and_keeps_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("strict");
    let o = cforge(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--mode", "strict"]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(out.join(TRACE_FILE)).unwrap();
    assert!(trace.lines().count() > 0);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary["status"], "error");
    assert_eq!(summary["exit_code"], 5);
    assert!(!out.join(FINAL_SNAPSHOT).exists());
}
