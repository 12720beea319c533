use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ringred::reduced_linear::{dense_eigenvalues, ReducedOperator};
use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ringred-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ringred"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn summary(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error(out: &Output, code: i32) -> Value {
    assert_eq!(out.status.code(), Some(code), "{}", String::from_utf8_lossy(&out.stdout));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["exit_code"], code);
    v
}

/// Parses a CSV table into its header and float rows.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn ground_state_writes_profile_and_caches_it() {
    let dir = scratch("gs");
    let first = summary(&run(&dir, &["ground-state"], None));
    assert_eq!(first["cached"], false);
    assert!((first["w0"].as_f64().unwrap() - 2.2062).abs() < 1e-4);
    let out = dir.join("out");
    assert!(out.join("profile.csv").exists() && out.join("profile.json").exists());
    let second = summary(&run(&dir, &["ground-state"], None));
    assert_eq!(second["cached"], true);
    for key in ["i0", "a0", "gamma0", "c0", "mass2"] {
        let (a, b) = (first["constants"][key].as_f64().unwrap(), second["constants"][key].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{key}");
    }
    assert_eq!(first["c_Np"], second["c_Np"]);
}

#[test]
fn subcritical_check_is_a_validation_error() {
    let dir = scratch("p05");
    let v = error(&run(&dir, &["ground-state"], Some(r#"{"ground_state":{"p":0.5}}"#)), 2);
    assert_eq!(v["error"]["kind"], "validation");
    assert!(v["error"]["message"].as_str().unwrap().contains("subcritical"));
}

#[test]
fn unknown_keys_and_bad_flags_are_rejected() {
    let dir = scratch("keys");
    error(&run(&dir, &["balance-sweep"], Some(r#"{"m":4,"extra":1}"#)), 2);
    error(&run(&dir, &["balance-sweep", "--threads", "0"], None), 2);
    error(&run(&dir, &["balance-sweep", "--format", "xml"], None), 2);
    error(&run(&dir, &["spectrum"], Some("{not json")), 2);
}

#[test]
fn balance_sweep_table() {
    let dir = scratch("sweep");
    let s = summary(&run(&dir, &["balance-sweep", "--threads", "2"], None));
    assert!(s["max_residual_rel"].as_f64().unwrap() <= 1e-10);
    let (header, rows) = table(&dir.join("out/balance.csv"));
    assert_eq!(rows.len(), 7);
    assert!(header.iter().any(|h| h == "asymptotic_d"));
    let ks: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(ks, vec![100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0, 6400.0]);

    let s = summary(&run(&dir, &["balance-sweep", "--format", "json"], Some(r#"{"K":[64,128],"m":3}"#)));
    assert_eq!(s["rows"], 2);
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("out/balance.json")).unwrap()).unwrap();
    assert_eq!(rows[1]["K"], 128);
    assert!(rows[0]["asymptotic_d"].is_number());
}

#[test]
fn spectrum_reports_inertia() {
    let dir = scratch("spectrum");
    let s = summary(&run(&dir, &["spectrum"], Some(r#"{"K":32}"#)));
    assert_eq!(s["inertia"], "1 zero, 31 negative, 32 positive");
    let (header, rows) = table(&dir.join("out/spectrum.csv"));
    assert_eq!(header[0], "l");
    assert_eq!(rows.len(), 32);
}

#[test]
fn small_spectrum_table_matches_dense_eigenvalues() {
    let dir = scratch("spec4");
    // four spikes cannot reach the full negative count, so the command flags it
    let out = run(&dir, &["spectrum"], Some(r#"{"K":4,"dhat":20}"#));
    error(&out, 3);
    let (_, rows) = table(&dir.join("out/spectrum.csv"));
    let mut eig: Vec<f64> = rows.iter().flat_map(|r| [r[3], r[4]]).collect();
    eig.sort_by(f64::total_cmp);
    let dense = dense_eigenvalues(&ReducedOperator::with_size(4, 20.0, 4.0).unwrap());
    for (a, b) in eig.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{eig:?} vs {dense:?}");
    }
    error(&run(&dir, &["spectrum"], Some(r#"{"K":4}"#)), 2);
}

#[test]
fn continuum_comparison() {
    let dir = scratch("cont");
    let s = summary(&run(&dir, &["compare-continuum"], Some(r#"{"phi":[{"kind":"cos","freq":1,"coef":1}]}"#)));
    let ratio = s["last_ratio"].as_f64().unwrap();
    assert!((0.2..=0.32).contains(&ratio), "{ratio}");
    let (header, rows) = table(&dir.join("out/convergence.csv"));
    assert_eq!(header, ["K", "sup_err_f", "sup_err_g", "ratio"]);
    assert_eq!(rows.len(), 4);

    summary(&run(&dir, &["compare-continuum"], Some(r#"{"phi":[],"K":[32,64]}"#)));
    let (_, rows) = table(&dir.join("out/convergence.csv"));
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));

    error(&run(&dir, &["compare-continuum"], Some(r#"{"phi":[{"kind":"tan","freq":1,"coef":1}]}"#)), 2);
    error(&run(&dir, &["compare-continuum"], Some(r#"{"phi":[{"kind":"cos","freq":1}]}"#)), 2);
    error(&run(&dir, &["compare-continuum"], Some(r#"{"phi":[],"varphi":[{"kind":"cos","freq":0,"coef":1}]}"#)), 2);
}

#[test]
fn energy_scan_radial_is_flat() {
    let dir = scratch("flat");
    let cfg = r#"{"K":16,"n_alpha":16,"potential":{"a":1,"m":4,"sigma":3}}"#;
    let s = summary(&run(&dir, &["energy-scan"], Some(cfg)));
    assert_eq!(s["flat"], true);
    assert_eq!(s["extrema"], 0);
    let ext: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("out/extrema.json")).unwrap()).unwrap();
    assert_eq!(ext["flat"], true);
}

#[test]
fn energy_scan_angular_has_critical_points_and_is_reproducible() {
    let dir = scratch("ang");
    let cfg = r#"{"K":16,"n_alpha":64,"potential":{"a":1,"m":4,"sigma":3,
        "perturbation":{"kind":"angular","eps":0.001,"frequency":16}}}"#;
    summary(&run(&dir, &["energy-scan"], Some(cfg)));
    let read = |name: &str| std::fs::read_to_string(dir.join("out").join(name)).unwrap();
    let ext: Value = serde_json::from_str(&read("extrema.json")).unwrap();
    let list = ext["extrema"].as_array().unwrap();
    assert!(list.len() >= 2);
    assert!(list.iter().all(|e| e["gamma_colocated"] == true));
    let (scan, extrema) = (read("scan.csv"), read("extrema.json"));
    summary(&run(&dir, &["energy-scan", "--threads", "1"], Some(cfg)));
    assert_eq!(read("scan.csv"), scan);
    assert_eq!(read("extrema.json"), extrema);
}

#[test]
fn energy_scan_outside_regime() {
    let dir = scratch("regime");
    let cfg = r#"{"K":16,"potential":{"a":1,"m":4,"sigma":1.5}}"#;
    let v = error(&run(&dir, &["energy-scan"], Some(cfg)), 2);
    assert!(v["error"]["message"].as_str().unwrap().contains("regime"));
}
