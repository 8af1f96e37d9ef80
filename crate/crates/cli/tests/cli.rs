use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn timebin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timebin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    timebin(&args)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

const FIXED_NOISELESS: &str = r#"{
    "schema_version": 1, "seed": 1, "trials": 10,
    "qubit": {"kind": "fixed", "alpha": [0.6, 0.0], "beta": [0.0, 0.8]},
    "channel": {"kind": "fixed", "theta": 0.0, "phi": 0.0, "chi": 0.0}
}"#;

#[test]
fn reject_noiseless_accepts_everything() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", FIXED_NOISELESS);
    let out = dir.path().join("out");
    let o = run("reject", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["command"], "reject");
    assert_eq!(r["result"]["aggregates"]["mean_accept_or_p1"].as_f64(), Some(1.0));
    assert_eq!(r["config"]["trials"], 10);
    let csv = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn correct_full_flip_lands_on_port_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "trials": 3,
            "qubit": {"kind": "fixed", "alpha": [0.6, 0.0], "beta": [0.0, 0.8]},
            "channel": {"kind": "fixed", "theta": 1.5707963267948966, "phi": 0.0, "chi": 0.0}}"#,
    );
    let out = dir.path().join("out");
    assert!(run("correct", &cfg, &out, &[]).status.success());
    let agg = &report(&out)["result"]["aggregates"];
    assert!((agg["mean_early_or_p2"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((agg["min_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let cfg = write_config(dir.path(), "n.json", FIXED_NOISELESS);
    assert!(run("correct", &cfg, &out, &[]).status.success());
    let agg = &report(&out)["result"]["aggregates"];
    assert_eq!(agg["mean_accept_or_p1"].as_f64(), Some(1.0));
}

#[test]
fn correct_ports_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "seed": 4, "trials": 200,
            "qubit": {"kind": "haar"}, "channel": {"kind": "uniform_theta"}}"#,
    );
    let out = dir.path().join("out");
    assert!(run("correct", &cfg, &out, &[]).status.success());
    let r = report(&out);
    for t in r["result"]["trials"].as_array().unwrap() {
        let sum = t["p_accept_or_p1"].as_f64().unwrap() + t["p_early_or_p2"].as_f64().unwrap();
        assert!((sum - 1.0).abs() < 1e-12);
    }
    assert!(r["result"]["aggregates"]["max_probability_defect"].as_f64().unwrap() < 1e-12);
}

#[test]
fn malformed_config_exits_2_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "bad.json", r#"{"schema_version": 1, "trails": 10}"#);
    let o = run("reject", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trails"));

    let cfg = write_config(
        dir.path(),
        "bad2.json",
        r#"{"schema_version": 1, "trials": 5, "qubit": {"kind": "haar"},
            "channel": {"kind": "small_theta", "theta_max": 4.0}}"#,
    );
    let o = run("reject", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("channel.theta_max"));
    assert!(!out.exists(), "no output before validation");
}

#[test]
fn missing_config_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("reject", &dir.path().join("nope.json"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", FIXED_NOISELESS);
    let blocker = write_config(dir.path(), "file", "");
    let o = run("reject", &cfg, &blocker.join("sub"), &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn overrides_apply_and_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", FIXED_NOISELESS);
    let out = dir.path().join("out");
    assert!(run("reject", &cfg, &out, &["--seed", "77", "--trials", "4"]).status.success());
    let r = report(&out);
    assert_eq!(r["seed"], 77);
    assert_eq!(r["config"]["seed"], 77);
    assert_eq!(r["config"]["trials"], 4);
    assert_eq!(r["result"]["trials"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_grid_matches_cos_squared() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"schema_version": 1,
            "qubit": {"kind": "fixed", "alpha": [0.6, 0.0], "beta": [0.0, 0.8]},
            "sweep": {"thetas": [0.0, 0.5235987755982988, 0.7853981633974483, 1.0471975511965976, 1.5707963267948966],
                      "phi": 0.7, "chi": -0.2}}"#,
    );
    let out = dir.path().join("out");
    assert!(run("sweep", &cfg, &out, &[]).status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let accept: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for (got, want) in accept.iter().zip([1.0, 0.75, 0.5, 0.25, 0.0]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    let single = write_config(
        dir.path(),
        "one.json",
        r#"{"schema_version": 1, "qubit": {"kind": "fixed", "alpha": [1, 0], "beta": [0, 0]},
            "sweep": {"theta_start": 0.0, "theta_stop": 0.0, "steps": 1}}"#,
    );
    assert!(run("sweep", &single, &out, &[]).status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
}

#[test]
fn correction_sweep_columns_are_complementary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"schema_version": 1,
            "qubit": {"kind": "fixed", "alpha": [0.6, 0.0], "beta": [0.0, 0.8]},
            "sweep": {"protocol": "correct", "theta_start": 0.0, "theta_stop": 3.0, "steps": 13, "phi": 0.7, "chi": -0.2}}"#,
    );
    let out = dir.path().join("out");
    assert!(run("sweep", &cfg, &out, &[]).status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let theta: f64 = cols[0].parse().unwrap();
        let p1: f64 = cols[1].parse().unwrap();
        let p2: f64 = cols[2].parse().unwrap();
        assert!((p2 - theta.sin().powi(2)).abs() < 1e-12);
        assert!((p2 - (1.0 - p1)).abs() < 1e-12);
    }
}

#[test]
fn empty_sweep_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"schema_version": 1, "qubit": {"kind": "haar"},
            "sweep": {"theta_start": 0.0, "theta_stop": 1.0, "steps": 0}}"#,
    );
    let o = run("sweep", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let ok = write_config(dir.path(), "v.json", r#"{"schema_version": 1, "verify": {"samples": 100}}"#);
    let o = run("verify", &ok, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("max_deviation"));

    let faulty = write_config(
        dir.path(),
        "f.json",
        r#"{"schema_version": 1, "verify": {"samples": 10, "fault": "hwp_sign"}}"#,
    );
    assert_eq!(run("verify", &faulty, &out, &[]).status.code(), Some(1));

    let empty = write_config(dir.path(), "e.json", r#"{"schema_version": 1, "verify": {"samples": 0}}"#);
    assert_eq!(run("verify", &empty, &out, &[]).status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "seed": 9, "trials": 300, "shot_sampling": true,
            "qubit": {"kind": "haar"}, "channel": {"kind": "small_theta", "theta_max": 0.5}}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("reject", &cfg, &a, &[]).status.success());
    assert!(run("reject", &cfg, &b, &[]).status.success());
    for f in ["report.json", "trials.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
