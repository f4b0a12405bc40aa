use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_lie-langevin");

const SMALL: &str = r#"{
    "system": "rigid_body",
    "parameters": {"inertia": [1, 2, 3], "initial": [0.6, -0.8, 1.2]},
    "noise": {"sigma": 0.5, "beta": 1.0, "seed": 4, "dt": 0.01, "t_final": 1.0},
    "scheme": "coadjoint",
    "outputs": {"ensemble_size": 2, "record_stride": 10}
}"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_csv_sidecar_echo_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(BIN).arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trajectory_0000.csv", "trajectory_0001.csv", "trajectory_0000.csv.meta.json", "config.echo.json", "summary.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("trajectory_0000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,Pi1,Pi2,Pi3,h0,C_norm_sq");
    assert_eq!(lines.count(), 11);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory_0000.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["partial"], false);
    assert_eq!(meta["record_stride"], 10);
}

#[test]
fn missing_dt_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace(r#""dt": 0.01, "#, ""));
    let out = Command::new(BIN).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise.dt"));
}

#[test]
fn unknown_suite_and_preset_exit_2() {
    let out = Command::new(BIN).args(["verify", "everything"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN).args(["preset", "nope", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_worker_count_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(BIN).arg("run").arg(&cfg).env("LPL_WORKERS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rerun_from_echo_is_bitwise_identical_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), SMALL);
    assert!(Command::new(BIN).arg("run").arg(&cfg).env("LPL_WORKERS", "1").status().unwrap().success());
    let b = tempfile::tempdir().unwrap();
    let status = Command::new(BIN)
        .arg("run")
        .arg(a.path().join("config.echo.json"))
        .arg("--out")
        .arg(b.path())
        .env("LPL_WORKERS", "4")
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["trajectory_0000.csv", "trajectory_0001.csv", "trajectory_0001.csv.meta.json", "config.echo.json", "summary.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn numerical_failure_flags_partial_output_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "system": "magnetic_particle",
        "parameters": {"mass": 1, "stiffness": 1e300, "field": [0, 0, 0], "initial": [1, 0, 0, 0, 0, 0]},
        "noise": {"sigma": 0.0, "theta": 0.0, "seed": 0, "dt": 0.5, "t_final": 50.0}
    }"#;
    let cfg = write_config(dir.path(), text);
    let out = Command::new(BIN).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["partial"], true);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "failed");
}

#[test]
fn vortex_preset_reports_octahedron_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN).args(["preset", "vortex-figure1", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let check = &summary["octahedron"][0];
    assert_eq!(check["octahedron_reached"], true, "{check}");
    assert!(dir.path().join("vortices_final.json").exists());
}
