// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const STEPS: &str = "401";

fn fluxgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxgate"))
        .env_remove("FLUXGATE_DEVICE")
        .args(["--spectrum-steps", STEPS])
        .args(args)
        .output()
        .expect("run fluxgate")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_str(d: &TempDir) -> &str {
    d.path().to_str().unwrap()
}

#[test]
fn no_arguments_prints_usage() {
    let out = Command::new(env!("CARGO_BIN_EXE_fluxgate")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn crossings_lists_five_labels() {
    let v: Value = serde_json::from_str(&ok(&fluxgate(&["crossings", "--device", "default"]))).unwrap();
    let map = v.as_object().unwrap();
    assert_eq!(map.keys().cloned().collect::<Vec<_>>(), ["A1", "A2", "A3", "A4", "A5"]);
    let a2 = map["A2"]["phi"].as_f64().unwrap();
    assert!(a2 < map["A5"]["phi"].as_f64().unwrap());
}

#[test]
fn spectrum_csv_has_nine_rows_per_flux_point() {
    let text = ok(&fluxgate(&["spectrum", "--phi-max", "0.3"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phi,label,omega_rad_per_ns"));
    assert_eq!(lines.count(), 9 * 401);
}

#[test]
fn strict_calibration_fails_and_saturation_reports_it() {
    let dir = TempDir::new().unwrap();
    let strict = fluxgate(&["trajectory", "--family", "gaussian", "--sigma", "2", "--out-dir", dir_str(&dir)]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("unreachable"));

    ok(&fluxgate(&[
        "trajectory", "--family", "gaussian", "--sigma", "2", "--policy", "saturate", "--out-dir", dir_str(&dir),
    ]));
    let side = json(&dir.path().join("trajectory.json"));
    assert_eq!(side["reached"], false);
    assert_eq!(side["policy"], "saturate");
    assert_eq!(side["invariant_violations"].as_array().unwrap().len(), 0);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,phi\n"));
    assert_eq!(csv.lines().count(), 4002);
}

#[test]
fn fixed_amplitude_trajectory_pins_endpoints() {
    let dir = TempDir::new().unwrap();
    ok(&fluxgate(&[
        "trajectory", "--family", "mollifier", "--sigma", "4", "--amplitude", "0.4", "--samples", "101", "--out-dir",
        dir_str(&dir),
    ]));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let phi: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(phi.len(), 101);
    assert_eq!(phi[0], 0.0);
    assert_eq!(phi[100], 0.0);
    assert!(phi.iter().all(|&p| (0.0..=0.4).contains(&p)));
    assert_eq!(json(&dir.path().join("trajectory.json"))["calibrated"], false);
}

#[test]
fn device_files_are_parsed_strictly() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"omega1_ghz": 5.889, "omega2_ghz": 5.031, "alpha1_mhz": -324.3, "alpha2_mhz": -234.7, "g_mhz": 24.7, "colour": 1}"#,
    )
    .unwrap();
    let out = fluxgate(&["--device", bad.to_str().unwrap(), "crossings"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn device_environment_variable_is_honoured() {
    let dir = TempDir::new().unwrap();
    let dev = dir.path().join("strong.json");
    fs::write(
        &dev,
        r#"{"omega1_ghz": 5.889, "omega2_ghz": 5.031, "alpha1_mhz": -324.3, "alpha2_mhz": -234.7, "g_mhz": 60, "t1_us": 20}"#,
    )
    .unwrap();
    let via_flag = ok(&fluxgate(&["--device", dev.to_str().unwrap(), "crossings"]));
    let via_env = Command::new(env!("CARGO_BIN_EXE_fluxgate"))
        .env("FLUXGATE_DEVICE", &dev)
        .arg("crossings")
        .output()
        .unwrap();
    assert_eq!(ok(&via_env), via_flag);
    assert_ne!(via_flag, ok(&fluxgate(&["crossings"])));
}

#[test]
fn sweep_writes_grid_and_optimum() {
    let dir = TempDir::new().unwrap();
    ok(&fluxgate(&[
        "sweep", "--family", "gaussian", "--sigma", "1:3:5", "--samples", "801", "--refine", "--out-dir", dir_str(&dir),
    ]));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("sigma,mu,n_norm,constraint_value,amplitude,feasible\n"));
    assert_eq!(csv.lines().count(), 6);
    let opt = json(&dir.path().join("optimum.json"));
    assert!(opt["refined"]["n_norm"].as_f64().unwrap() <= opt["argmin"]["n_norm"].as_f64().unwrap());
}

#[test]
fn simulate_reports_gate_and_populations() {
    let dir = TempDir::new().unwrap();
    let pops = dir.path().join("pops.csv");
    let text = ok(&fluxgate(&[
        "simulate", "--family", "gaussian", "--sigma", "2", "--tau", "8", "--amplitude", "0.5", "--populations",
        pops.to_str().unwrap(), "--every", "1000",
    ]));
    let v: Value = serde_json::from_str(&text).unwrap();
    let leak = v["leakage_20"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&leak));
    assert_eq!(v["fidelity_selected"]["mode"], "phase_optimized");
    assert!(v["unitarity_defect"].as_f64().unwrap() <= 1e-9);
    let csv = fs::read_to_string(&pops).unwrap();
    assert!(csv.starts_with("t,p00,p01,p02,p10,p11,p12,p20,p21,p22\n"));
}

#[test]
fn rank_check_writes_table_and_summary() {
    let dir = TempDir::new().unwrap();
    let samples = dir.path().join("samples.json");
    fs::write(
        &samples,
        r#"[{"family": "gaussian", "sigma": 2.0, "tau": 10.0},
            {"family": "mollifier", "sigma": 3.0, "tau": 10.0},
            {"family": "square", "sigma": 1.0, "tau": 10.0}]"#,
    )
    .unwrap();
    let out = fluxgate(&["rank-check", "--samples-file", samples.to_str().unwrap(), "--out-dir", dir_str(&dir)]);
    assert_eq!(out.status.code(), Some(1), "unknown family must be rejected");

    fs::write(
        &samples,
        r#"[{"family": "gaussian", "sigma": 2.0, "tau": 10.0},
            {"family": "mollifier", "sigma": 3.0, "tau": 10.0},
            {"family": "gaussian", "sigma": 1.5, "tau": 10.0}]"#,
    )
    .unwrap();
    ok(&fluxgate(&[
        "rank-check", "--samples-file", samples.to_str().unwrap(), "--policy", "saturate", "--out-dir", dir_str(&dir),
    ]));
    let summary = json(&dir.path().join("rank_summary.json"));
    assert_eq!(summary["included"], 3);
    assert_eq!(summary["kendall"]["pairs"], 3);
    let pairs = fs::read_to_string(dir.path().join("concordance.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 4);
    assert_eq!(fs::read_to_string(dir.path().join("rank.csv")).unwrap().lines().count(), 4);

    ok(&fluxgate(&["rank-check", "--samples-file", samples.to_str().unwrap(), "--out-dir", dir_str(&dir)]));
    let strict = json(&dir.path().join("rank_summary.json"));
    assert_eq!(strict["excluded"], 3);
    assert_eq!(strict["kendall"]["tau_b"], Value::Null);
}

#[test]
fn reproduce_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(&fluxgate(&["reproduce", "fig3", "--out-dir", dir_str(&a)]));
    ok(&fluxgate(&["reproduce", "fig3", "--out-dir", dir_str(&b)]));
    let manifest = json(&a.path().join("MANIFEST.json"));
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert_eq!(files.iter().filter(|f| f.ends_with(".csv")).count(), 5);
    for name in files.iter().chain(&["MANIFEST.json"]) {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn reproduce_rejects_unknown_ids() {
    let dir = TempDir::new().unwrap();
    let out = fluxgate(&["reproduce", "fig9", "--out-dir", dir_str(&dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig2"));
}
