use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn plasmon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plasmon"))
        .args(args)
        .env_remove("PLASMON_DISPERSION_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parses CSV text into (header, rows of f64 where parseable).
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn validate_passes_and_detects_fault() {
    let ok = plasmon(&["validate"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let (header, rows) = table(&stdout(&ok));
    assert_eq!(header, ["check", "points", "max_error", "tolerance", "passed"]);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[4] == "true"));

    let bad = plasmon(&["validate", "--inject-fault"]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("ratio,130,"));
}

#[test]
fn missing_dispersion_is_config_error() {
    let out = plasmon(&["validate", "--dispersion", "/nonexistent/gold.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn dispersion_dir_fallback() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("flat.csv"),
        "wavelength_nm,n,k\n700,0.16,4.2\n900,0.18,5.6\n",
    )
    .unwrap();
    let args = ["index-sweep", "--dispersion", "flat.csv", "--n-steps", "3"];
    assert_eq!(code(&plasmon(&args)), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_plasmon"))
        .args(args)
        .env("PLASMON_DISPERSION_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn reflectance_curves_shift_with_index() {
    let out = plasmon(&["reflectance"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = table(&stdout(&out));
    assert_eq!(header, ["n_analyte", "theta_deg", "reflectance"]);
    assert_eq!(rows.len(), 2 * 361);
    let mut dips = Vec::new();
    for curve in rows.chunks(361) {
        let theta = col(curve, 1);
        let r = col(curve, 2);
        let minima: Vec<usize> = (1..r.len() - 1).filter(|&i| r[i] < r[i - 1] && r[i] < r[i + 1]).collect();
        assert_eq!(minima.len(), 1);
        dips.push(theta[minima[0]]);
    }
    assert!(dips[1] > dips[0], "{dips:?}");
}

#[test]
fn index_sweep_minimum_and_flat_sensitivity() {
    let out = plasmon(&["index-sweep"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = table(&stdout(&out));
    assert_eq!(header, ["n_analyte", "reflectance", "sensitivity"]);
    assert_eq!(rows.len(), 1093);
    let (n, r, s) = (col(&rows, 0), col(&rows, 1), col(&rows, 2));
    let i = (0..r.len()).min_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap();
    assert!((n[i] - 1.383).abs() < 0.01, "{}", n[i]);
    let s_max = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(s[i].abs() < 0.05 * s_max, "{} vs {s_max}", s[i]);

    let one = plasmon(&["index-sweep", "--n-steps", "1", "--n-min", "1.38"]);
    assert_eq!(code(&one), 0);
    let (_, rows) = table(&stdout(&one));
    assert_eq!(rows.len(), 1);
    assert!(rows[0][2].parse::<f64>().unwrap().is_finite());
}

#[test]
fn bad_inputs_are_config_errors() {
    assert_eq!(code(&plasmon(&["reflectance", "--theta-steps", "0"])), 2);
    assert_eq!(code(&plasmon(&["reflectance", "--n-analyte", "1.6"])), 2);
    assert_eq!(code(&plasmon(&["ratio", "--eta-a", "0.9", "--eta-b", "0.6"])), 2);
    assert_eq!(code(&plasmon(&["ratio", "--state", "twin-fock", "--photons", "1.5"])), 2);
    assert_eq!(code(&plasmon(&["ratio", "--state", "laser"])), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"theta": 70.0, "n_steps": 4, "state": "tmsv", "photons": [1, 2], "eta": 0.8}"#).unwrap();
    let cfg = cfg.to_str().unwrap();

    let out = plasmon(&["ratio", "--config", cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&stdout(&out));
    assert_eq!(header, ["state", "N", "eta", "n_analyte", "R"]);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[0] == "tmsv" && r[2] == "0.8"));

    let theta70 = stdout(&out);
    let theta73 = stdout(&plasmon(&["ratio", "--config", cfg, "--theta", "73"]));
    assert_ne!(theta70, theta73);
    let explicit = stdout(&plasmon(&[
        "ratio", "--theta", "73", "--n-steps", "4", "--state", "tmsv", "--photons", "1,2", "--eta", "0.8",
    ]));
    assert_eq!(theta73, explicit);

    fs::write(dir.path().join("typo.json"), r#"{"thetta": 70.0}"#).unwrap();
    let typo = dir.path().join("typo.json");
    assert_eq!(code(&plasmon(&["ratio", "--config", typo.to_str().unwrap()])), 2);
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let mut all: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    all.extend(["--out", &p]);
    let out = plasmon(&all);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    fs::read(&path).unwrap()
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = ["precision", "--theta-steps", "7", "--photons", "1,2"];
    let a = run_to(dir.path(), "a.csv", &args);
    let b = run_to(dir.path(), "b.csv", &args);
    assert_eq!(a, b);
    let (header, rows) = table(std::str::from_utf8(&a).unwrap());
    assert_eq!(
        header,
        ["theta_deg", "n_inf", "state", "N", "eta_a", "eta_b", "delta_n", "slope", "noise"]
    );
    assert_eq!(rows.len(), 7 * 5 * 2);

    let r1 = run_to(dir.path(), "r1.json", &["ratio", "--format", "json", "--n-steps", "50"]);
    let r2 = run_to(dir.path(), "r2.json", &["ratio", "--format", "json", "--n-steps", "50"]);
    assert_eq!(r1, r2);
}

#[test]
fn json_keys_equal_csv_headers() {
    for cmd in ["reflectance", "index-sweep", "inflection", "ratio", "precision"] {
        let small = ["--theta-steps", "3", "--n-steps", "3"];
        let csv = plasmon(&[&[cmd][..], &small].concat());
        let json = plasmon(&[&[cmd, "--format", "json"][..], &small].concat());
        assert_eq!(code(&csv), 0, "{cmd}");
        let (header, rows) = table(&stdout(&csv));
        let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), rows.len(), "{cmd}");
        let keys: Vec<String> = arr[0].as_object().unwrap().keys().cloned().collect();
        let mut sorted_header = header.clone();
        sorted_header.sort();
        let mut sorted_keys = keys;
        sorted_keys.sort();
        assert_eq!(sorted_header, sorted_keys, "{cmd}");
    }
}

#[test]
fn inflection_follows_angle() {
    let out = plasmon(&["inflection", "--theta-steps", "19"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = table(&stdout(&out));
    assert_eq!(header, ["theta_deg", "n_inf"]);
    assert_eq!(rows.len(), 19);
    let n = col(&rows, 1);
    assert!(n.windows(2).all(|w| w[1] > w[0]));
}
