use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracwave")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("machine-readable stderr")
}

#[test]
fn simulate_with_zero_noise_gives_zero_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"noise": {"kind": "atoms", "atoms": []}, "drift": {"kind": "zero"}, "modes": 4, "dt": 0.05, "record_coefficients": true}"#,
    );
    let out = dir.path().join("run");
    let o = fracwave(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,hr_norm,active_N,active_K,u_1,u_2,u_3,u_4"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[1], "0");
        assert!(cells[4..].iter().all(|c| c.parse::<f64>().unwrap() == 0.0));
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["modes"], 4);
    assert_eq!(summary["final_norm"], 0.0);
    assert!(out.join("run.log").exists());
}

#[test]
fn default_config_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let o = fracwave(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let mut expected = serde_json::to_value(fracwave::RunConfig::default()).unwrap();
    expected["seed"] = 9.into();
    expected["out_dir"] = dir.path().to_str().unwrap().into();
    assert_eq!(summary["config"], expected);
}

#[test]
fn invalid_window_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"gamma": 1.0}"#);
    let o = fracwave(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["status"], "error");
    assert!(err["reason"].as_str().unwrap().contains("γ > d required"));
}

#[test]
fn noise_export_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"noise": {"kind": "symmetric_stable", "alpha": 1.2}, "cutoff": 0.1, "k_schedule": [1, 2], "dimension": 2, "gamma": 3, "r": 1.2, "modes": 6}"#,
    );
    let o = fracwave(&["noise", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let header: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("noise.json")).unwrap()).unwrap();
    assert_eq!(header["seed"], 4);
    assert_eq!(header["cutoff"], 0.1);
    assert!(header["sigma_eps2"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(dir.path().join("noise.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x1,x2,z"));
    assert_eq!(csv.lines().count() as u64, header["jumps"].as_u64().unwrap() + 1);
}

#[test]
fn ensemble_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"modes": 8, "dt": 0.02}"#);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = fracwave(&[
            "ensemble", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "1234", "--replicas", "8", "--workers", "4",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((fs::read(out.join("replicas.csv")).unwrap(), fs::read(out.join("report.json")).unwrap()));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("replica,seed,jumps,final_norm,n_cap_reached,sup_norm_sq_N1,"));
    assert_eq!(text.lines().nth(3).unwrap().split(',').nth(1), Some((1234u64 ^ 2).to_string().as_str()));
}

#[test]
fn isometry_negative_control_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"dt": 0.1}"#);
    let d = dir.path().to_str().unwrap();
    let ok = fracwave(&["verify", "--suite", "isometry", "--config", &cfg, "--out", d, "--replicas", "20000"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let bad = fracwave(&["verify", "--suite", "isometry", "--negative-control", "--config", &cfg, "--out", d, "--replicas", "20000"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(stderr_json(&bad)["status"], "fail");
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verdict_isometry.json")).unwrap()).unwrap();
    assert_eq!(verdict["verdict"]["negative_control"], true);
    assert_eq!(verdict["verdict"]["passed"], false);
}

#[test]
fn unknown_suite_is_rejected_by_the_parser() {
    let o = fracwave(&["verify", "--suite", "nonsense"]);
    assert!(!o.status.success());
}
