use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wedgelab"));
    c.env_remove("WEDGELAB_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn single_report(dir: &Path) -> (PathBuf, Value) {
    let reports: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("report-"))
        .collect();
    assert_eq!(reports.len(), 1, "{reports:?}");
    let body = fs::read_to_string(&reports[0]).unwrap();
    (reports[0].clone(), serde_json::from_str(&body).unwrap())
}

#[test]
fn verify_car_passes_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["verify-car"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify-car: PASS"));
    let (path, report) = single_report(&tmp.path().join("verify-car"));
    let hash = report["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(path.ends_with(format!("report-{}.json", &hash[..16])));
    assert_eq!(report["passed"], Value::Bool(true));
    assert_eq!(report["experiment"], "verify-car");
    assert_eq!(report["claim"], "car-relations");
    assert_eq!(report["tolerance_profile"], "default");
    assert!(report["checks"].as_array().unwrap().len() > 5);
    assert!(tmp.path().join("verify-car/anticommutators.csv").exists());
    let log = fs::read_to_string(tmp.path().join("runs.jsonl")).unwrap();
    let line: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(line["experiment"], "verify-car");
    assert!(line["seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert_eq!(run(&["oracle-crosscheck", "--seed", "7"], dir.path()).status.code(), Some(0));
    }
    let (pa, _) = single_report(&a.path().join("oracle-crosscheck"));
    let (pb, _) = single_report(&b.path().join("oracle-crosscheck"));
    assert_eq!(pa.file_name(), pb.file_name());
    assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
    // Runs append to the log.
    assert_eq!(run(&["oracle-crosscheck", "--seed", "7"], a.path()).status.code(), Some(0));
    assert_eq!(fs::read_to_string(a.path().join("runs.jsonl")).unwrap().lines().count(), 2);
}

#[test]
fn failed_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[tolerances]\nklein_gordon = 0.0\n");
    let out = run(&["klein-gordon", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("klein-gordon: FAIL") && stdout.contains("failed:"), "{stdout}");
    let (_, report) = single_report(&tmp.path().join("klein-gordon"));
    assert_eq!(report["passed"], Value::Bool(false));
}

#[test]
fn capacity_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[car]\nmax_modes = 2\n");
    let out = run(&["verify-car", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
    let log = fs::read_to_string(tmp.path().join("runs.jsonl")).unwrap();
    assert!(log.contains("\"passed\":null"));
}

#[test]
fn configuration_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    for text in ["[model]\nd = \"two\"\n", "[car]\nbogus = 1\n", "nonsense = [", "schema_version = 9\n", "[model]\nd = 7\n"] {
        let cfg = write_config(tmp.path(), text);
        let out = run(&["klein-gordon", "--config", cfg.to_str().unwrap()], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));
    }
    let missing = run(&["klein-gordon", "--config", "/nonexistent/config.toml"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(run(&["no-such-experiment"], tmp.path()).status.code(), Some(2));
    assert_eq!(run(&["klein-gordon", "--jobs", "0"], tmp.path()).status.code(), Some(2));
    assert_eq!(run(&["klein-gordon", "--tolerance-profile", "lax"], tmp.path()).status.code(), Some(2));
}

#[test]
fn strict_profile_tightens_residual_bounds() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(&["klein-gordon"], a.path()).status.code(), Some(0));
    assert_eq!(run(&["klein-gordon", "--tolerance-profile", "strict"], b.path()).status.code(), Some(0));
    let (_, da) = single_report(&a.path().join("klein-gordon"));
    let (_, db) = single_report(&b.path().join("klein-gordon"));
    assert_eq!(db["tolerance_profile"], "strict");
    assert_ne!(da["config_hash"], db["config_hash"]);
    let tol = |r: &Value| {
        r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "max ‖φ((□ + m²)f)‖").unwrap()["tolerance"]
            .as_f64()
            .unwrap()
    };
    assert!((tol(&da) / tol(&db) - 10.0).abs() < 1e-9);
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_wedgelab"))
        .arg("klein-gordon")
        .env("WEDGELAB_OUT", tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(tmp.path().join("runs.jsonl").exists());
    assert!(tmp.path().join("klein-gordon").is_dir());
}

#[test]
fn witness_table_has_one_row_per_n() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[witness]\nn_max = 3\ntranslation = [0.01, 0.02]\n");
    let out = run(&["nonlocality-witness", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("nonlocality-witness/witness.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "label");
    for col in ["meet_rank", "witness", "coherence", "lambda_min", "lambda_certificate"] {
        assert!(header.contains(&col), "{col}");
    }
    let labels: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["1", "2", "3"]);
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bisognano-wichmann"));
}
