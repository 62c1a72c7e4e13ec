//! End-to-end checks of the command-line contract: exit codes, output
//! schema and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data_dir() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .canonicalize()
        .unwrap()
        .display()
        .to_string()
}

fn satkey(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satkey"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SATKEY_DATA_DIR", data_dir())
        .output()
        .expect("spawn satkey")
}

#[test]
fn pass_row_count_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = satkey(&["pass"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("pass.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t_s,zenith_deg,slant_km,elevation_deg,eta_total"));
    let rows = lines.count();
    // a 500 km zenith pass above 10 deg elevation spans about +-221 s at 1 s steps
    assert!(
        (440..=444).contains(&rows),
        "expected 442 +- 2 rows, got {rows}"
    );
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn identical_invocations_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "altitude",
        "--source",
        "tds",
        "--h-min",
        "500",
        "--h-max",
        "700",
        "--h-step",
        "100",
    ];
    assert!(satkey(&args, a.path()).status.success());
    assert!(satkey(&args, b.path()).status.success());
    let csv_a = std::fs::read(a.path().join("altitude.csv")).unwrap();
    let csv_b = std::fs::read(b.path().join("altitude.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "CSV bodies differ between identical runs");
}

#[test]
fn spectrum_row_count_matches_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = satkey(
        &[
            "spectrum",
            "--source",
            "sps",
            "--lambda-min",
            "640",
            "--lambda-max",
            "670",
            "--lambda-step",
            "5",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    // declared grid: 640..670 step 5 (7 points) plus the 656.448 line anchor
    assert_eq!(csv.lines().count() - 1, 8, "rows: {csv}");
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("skipped_wavelengths"));
}

#[test]
fn wcs_rejected_by_finite_commands_with_exit_2() {
    for cmd in ["annual", "altitude", "offset", "optimize"] {
        let dir = tempfile::tempdir().unwrap();
        let out = satkey(&[cmd, "--source", "wcs"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{cmd} accepted wcs");
        let msg = String::from_utf8_lossy(&out.stderr);
        assert!(msg.contains("tds"), "unhelpful message: {msg}");
        // no partial outputs
        assert!(!dir.path().join(format!("{cmd}.csv")).exists());
        assert!(!dir.path().join("manifest.json").exists());
    }
}

#[test]
fn unknown_source_and_bad_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = satkey(&["pass", "--source", "maser"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[protocol]\nnonsense_key = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_satkey"))
        .args(["pass", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .env("SATKEY_DATA_DIR", data_dir())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_dataset_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_satkey"))
        .args(["pass", "--out"])
        .arg(dir.path())
        .env("SATKEY_DATA_DIR", "/definitely/not/here")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("pass.csv").exists());
}

#[test]
fn optimize_emits_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = satkey(
        &["optimize", "--source", "sps", "--day", "--altitude", "500"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("optimize.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("daylight,skl_bits,p_x"));
    assert_eq!(lines.count(), 1);
}
