use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dyspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyspec")).args(args).env_remove("DYSPEC_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn error_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

/// Top-level keys of `doc` are exactly the properties of the shipped schema,
/// all of them required.
fn matches_schema_keys(doc: &Value, schema: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(schema);
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let mut want: Vec<&str> = schema["properties"].as_object().unwrap().keys().map(String::as_str).collect();
    let mut required: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let mut got: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
    want.sort();
    required.sort();
    got.sort();
    assert_eq!(got, want);
    assert_eq!(got, required);
}

#[test]
fn validate_prints_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"flow": {"name": "cellular"}, "tasks": [{"task": "spectrum_X"}]}"#);
    let o = dyspec(&["validate", &cfg]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    let (head, body) = out.split_once('\n').unwrap();
    assert_eq!(head, "OK");
    let v: Value = serde_json::from_str(body).unwrap();
    assert_eq!(v["integration"]["T"], 200.0);
    assert_eq!(v["integration"]["step"], 1e-3);
    assert_eq!(v["ensemble"]["size"], 64);
}

#[test]
fn negative_step_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"flow": {"name": "cellular"}, "integration": {"step": -0.001}}"#);
    let o = dyspec(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"]["kind"], "config");
    assert_eq!(e["error"]["field"], "integration.step");
}

#[test]
fn unknown_flow_lists_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"flow": {"name": "kolmogorov"}}"#);
    let o = dyspec(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let msg = error_json(&o)["error"]["message"].as_str().unwrap().to_string();
    for name in ["shear", "cellular", "abc"] {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{\"flow\": {\"name\": \"shear\"},\n \"tasks\": [}");
    let o = dyspec(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_json(&o)["error"]["message"].as_str().unwrap().contains("line 2"));
}

#[test]
fn zero_m_for_euler_ess_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"flow": {"name": "shear"}, "tasks": [{"task": "euler_ess", "m": 0, "t": 1}]}"#);
    let o = dyspec(&["run", &cfg, "--output-dir", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["field"], "tasks[0].m");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn collapsed_qr_exits_with_conditioning_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"flow": {"name": "cellular"},
            "integration": {"T": 40, "W": 10, "qr_every": 1000},
            "ensemble": {"size": 0, "anchors": [{"x": [0, 0], "eta": [0, 1]}]},
            "tasks": [{"task": "spectrum_BXm", "m": [-1000]}]}"#,
    );
    let o = dyspec(&["run", &cfg, "--output-dir", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_json(&o)["error"]["kind"], "conditioning");
}

#[test]
fn run_writes_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"flow": {"name": "shear"},
            "integration": {"T": 40, "W": 10, "step": 2e-3},
            "ensemble": {"size": 4, "seed": 3},
            "tasks": [
              {"task": "spectrum_B"}, {"task": "spectrum_BXm", "m": [0.5]},
              {"task": "mane", "lambdas": [0.0, 2.0], "N": 5, "grid_size": 2},
              {"task": "euler_ess", "m": 1, "t": 2},
              {"task": "trajectory", "index": 1, "duration": -2, "every": 100}
            ]}"#,
    );
    let o = Command::new(env!("CARGO_BIN_EXE_dyspec"))
        .args(["run", &cfg, "--output-dir", out.to_str().unwrap(), "--seed", "5"])
        .env("DYSPEC_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "spectrum_B.json",
        "spectrum_B_full.json",
        "spectrum_BXm_0.5.json",
        "samples_B.csv",
        "mane_0.json",
        "mane_2.json",
        "euler_ess.json",
        "trajectory_1.csv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let spec: Value = serde_json::from_str(&fs::read_to_string(out.join("spectrum_B.json")).unwrap()).unwrap();
    assert_eq!(spec["config"]["ensemble"]["seed"], 5);
    assert_eq!(spec["params"]["ensemble_size"], 4);
    assert!(spec["config"].get("output_dir").is_none());
    let intervals = spec["intervals"].as_array().unwrap();
    assert_eq!(intervals.len(), spec["samples"].as_array().unwrap().len());
    for w in intervals.windows(2) {
        assert!(w[0][1].as_f64().unwrap() < w[1][0].as_f64().unwrap());
    }
    let samples = fs::read_to_string(out.join("samples_B.csv")).unwrap();
    assert_eq!(samples.lines().next(), Some("trajectory,index,window_start,rate"));
    let traj = fs::read_to_string(out.join("trajectory_1.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,eta1,eta2,s"));
    assert_eq!(lines.next().unwrap().split(',').next(), Some("-2"));
    let ess: Value = serde_json::from_str(&fs::read_to_string(out.join("euler_ess.json")).unwrap()).unwrap();
    for key in ["sigma_B", "sigma_X", "sigma_BXm", "lambda_max", "lambda_min", "m_star", "annulus", "identity_claimed"] {
        assert!(ess.get(key).is_some(), "{key}");
    }
    assert_eq!(ess["identity_claimed"], true);
    let mane: Value = serde_json::from_str(&fs::read_to_string(out.join("mane_2.json")).unwrap()).unwrap();
    assert_eq!(mane["found"], false);
    assert_eq!(mane["side"], "none");
    matches_schema_keys(&spec, "spectrum.schema.json");
    matches_schema_keys(&ess, "euler_ess.schema.json");
    matches_schema_keys(&mane, "mane.schema.json");
}
