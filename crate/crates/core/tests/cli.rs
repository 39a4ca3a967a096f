//! End-to-end checks of the `bswap-lab` binary: exit codes, output files,
//! and byte-level determinism of data files.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bswap-lab"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bswap-lab-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn spectrum_scenario_writes_deterministic_csv() {
    let dir1 = scratch("spec1");
    let dir2 = scratch("spec2");
    for dir in [&dir1, &dir2] {
        let status = bin()
            .args(["spectrum", "--out"])
            .arg(dir)
            .status()
            .expect("binary runs");
        assert!(status.success());
    }
    let a = std::fs::read(dir1.join("spectrum.csv")).unwrap();
    let b = std::fs::read(dir2.join("spectrum.csv")).unwrap();
    assert_eq!(a, b, "spectrum.csv must be byte-identical across runs");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir1.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["scenario"], "spectrum");
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v == "spectrum.csv"));
    // two-photon line present between the one-photon lines
    let csv = String::from_utf8(a).unwrap();
    let two_photon: Vec<&str> = csv
        .lines()
        .filter(|l| l.starts_with("00,11,2"))
        .collect();
    assert_eq!(two_photon.len(), 1, "missing |00⟩→|11⟩ two-photon row");
}

#[test]
fn shots_without_seed_is_a_config_error() {
    let dir = scratch("noseed");
    let status = bin()
        .args(["spectrum", "--shots", "64", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_scenario_is_rejected() {
    let status = bin().arg("fig9").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn device_file_is_loaded_and_invalid_files_are_rejected() {
    let dir = scratch("device");
    let device = dir.join("dev.device");
    std::fs::write(
        &device,
        "omega1_ghz = 4.3796\nomega2_ghz = 4.61368\ndelta1_ghz = -0.2393\n\
         delta2_ghz = -0.24278\nlambda = 1.0\nj_ghz = 6.2316966843e-4\nlevels = 3\n",
    )
    .unwrap();
    let status = bin()
        .args(["spectrum", "--device"])
        .arg(&device)
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());

    // both J and target ZZ specified: config error, exit 2
    let bad = dir.join("bad.device");
    std::fs::write(
        &bad,
        "omega1_ghz = 4.4\nomega2_ghz = 4.6\ndelta1_ghz = -0.2\ndelta2_ghz = -0.2\n\
         j_ghz = 0.001\ntarget_zz_khz = 90\n",
    )
    .unwrap();
    let status = bin()
        .args(["spectrum", "--device"])
        .arg(&bad)
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn limits_scenario_in_json_format() {
    let dir = scratch("limits");
    let status = bin()
        .args(["limits", "--format", "json", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("limits.json")).unwrap()).unwrap();
    assert_eq!(body["columns"][0], "delta_over_detuning");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap())
            .unwrap();
    let enhancement = manifest["resolved"]["enhancement_factor"].as_f64().unwrap();
    assert!((12.0..=16.0).contains(&enhancement));
}

#[test]
fn swcheck_scenario_reports_residual_shrink() {
    let dir = scratch("swcheck");
    let status = bin().args(["swcheck", "--out"]).arg(&dir).status().unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap())
            .unwrap();
    let shrink = manifest["resolved"]["residual_shrink_on_halving_j"]
        .as_f64()
        .unwrap();
    assert!(shrink >= 6.0, "shrink {shrink}");
}

#[test]
fn unreachable_zz_target_is_a_calibration_failure() {
    let dir = scratch("calfail");
    let device = dir.join("impossible.device");
    // negative ZZ target: this device's static ZZ is positive for all J,
    // so the bracketed root search finds no sign change
    std::fs::write(
        &device,
        "omega1_ghz = 4.3796\nomega2_ghz = 4.61368\ndelta1_ghz = -0.2393\n\
         delta2_ghz = -0.24278\nlambda = 1.0\ntarget_zz_khz = -90.0\nlevels = 3\n",
    )
    .unwrap();
    let out = bin()
        .args(["spectrum", "--device"])
        .arg(&device)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fit_j"));
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = scratch("envvar");
    let status = bin()
        .arg("limits")
        .env("BSWAP_LAB_OUT", &dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("limits.csv").exists());
}
