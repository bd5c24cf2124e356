//! End-to-end checks of the batch front-end: exit codes, artifact layout,
//! and byte-level reproducibility.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cutlocus"))
}

fn run_job(dir: &Path, job: &str) -> std::process::Output {
    let job_path = dir.join("job.json");
    std::fs::write(&job_path, job).unwrap();
    bin()
        .arg("--job")
        .arg(&job_path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

#[test]
fn d4_roots_json_matches_the_cubic() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["d4-roots", "--kind", "minus", "--a", "0", "--b", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("roots.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let roots: Vec<f64> =
        v["roots"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(roots.len(), 3);
    assert!((roots[0] + 1.7320508).abs() < 1e-6);
    assert!(roots[1].abs() < 1e-9);
    assert!((roots[2] - 1.7320508).abs() < 1e-6);
}

#[test]
fn rerun_reproduces_artifacts_byte_identically() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let job = r#"{
        "manifold": {"kind": "flat_torus", "periods": [1, 1]},
        "command": "cut-locus",
        "params": {"source": [0.0, 0.0], "grid": 64, "rays": 16}
    }"#;
    let o1 = run_job(d1.path(), job);
    let o2 = run_job(d2.path(), job);
    assert!(o1.status.success(), "{}", String::from_utf8_lossy(&o1.stderr));
    assert!(o2.status.success());
    for name in ["singular_set.json", "cut_records.csv", "plot.svg"] {
        let a = std::fs::read(d1.path().join("out").join(name)).unwrap();
        let b = std::fs::read(d2.path().join("out").join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between runs");
    }
}

#[test]
fn unknown_keys_are_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        dir.path(),
        r#"{"manifold": {"kind": "sphere", "radius": 1.0},
            "command": "cut-locus",
            "params": {"source": [1.0, 0.0], "grid": 16, "bogus": 1}}"#,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn incompatible_boundary_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        dir.path(),
        r#"{"manifold": {"kind": "annulus", "r_inner": 1.0, "r_outer": 2.0},
            "command": "solve-hjbvp",
            "params": {"boundary": {"g": [{"kind": "zero"}, {"kind": "zero"}],
                                     "offsets": [1.1, 0.0]},
                        "grid": 16}}"#,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn annulus_cut_locus_job_produces_the_mid_circle() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        dir.path(),
        r#"{"manifold": {"kind": "annulus", "r_inner": 1.0, "r_outer": 2.0},
            "command": "cut-locus",
            "params": {"boundary": {"g": [{"kind": "zero"}, {"kind": "zero"}]},
                        "grid": 64, "rays": 8}}"#,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/singular_set.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let pts = v["points"].as_array().unwrap();
    assert!(pts.len() > 60);
    for p in pts {
        let x = p["p"][0].as_f64().unwrap();
        let y = p["p"][1].as_f64().unwrap();
        let r = (x * x + y * y).sqrt();
        assert!((r - 1.5).abs() < 1e-5, "point at radius {r}");
    }
    assert!(dir.path().join("out/plot.svg").exists());
}

#[test]
fn trace_cdc_job_terminates_at_the_cusp() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        dir.path(),
        r#"{"command": "trace-cdc",
            "params": {"model": "A3", "start": [-0.5, 0.75]}}"#,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let joins = std::fs::read_to_string(dir.path().join("out/joins.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&joins).unwrap();
    assert_eq!(v["subtype"], "A3_I");
    let cdc = std::fs::read_to_string(dir.path().join("out/cdc.csv")).unwrap();
    assert!(cdc.lines().count() > 10);
    assert!(cdc.starts_with("s,ray_t,ray_z,radius,slack"));
}

#[test]
fn geodesic_job_writes_trajectory_with_det() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        dir.path(),
        r#"{"manifold": {"kind": "sphere", "radius": 1.0},
            "command": "geodesic",
            "params": {"start": [1.2, 0.4], "direction": [0.6, 0.3], "t_end": 3.0}}"#,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,v1,v2,det_dF"));
    assert!(csv.lines().count() > 5);
}
