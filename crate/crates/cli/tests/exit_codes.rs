//! Exit-code contract: 0 success, 1 validation hard-failure, 2 bad
//! configuration, 3 I/O failure.

use std::fs;
use std::process::Command;

fn ghznet(args: &[&str]) -> std::process::ExitStatus {
    Command::new(env!("CARGO_BIN_EXE_ghznet"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("ghznet-exit-{}-{name}", std::process::id()))
}

#[test]
fn success_is_zero() {
    let out = tmp("ok.csv");
    let status = ghznet(&["parent-rate", "--out", out.to_str().unwrap()]);
    assert_eq!(status.code(), Some(0));
    fs::remove_file(out).ok();
}

#[test]
fn validation_hard_failure_is_one_and_still_writes() {
    // A single trial cannot hit the 1% agreement bar.
    let out = tmp("fail.json");
    let status = ghznet(&[
        "validate",
        "--trials",
        "1",
        "--seed",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.code(), Some(1));
    let report = fs::read_to_string(&out).expect("report written despite failure");
    assert!(report.contains("hard_failures"));
    fs::remove_file(out).ok();
}

#[test]
fn missing_out_is_config_error() {
    assert_eq!(ghznet(&["parent-rate"]).code(), Some(2));
}

#[test]
fn invalid_config_is_config_error() {
    let cfg = tmp("bad.json");
    fs::write(&cfg, r#"{"trials": 0}"#).unwrap();
    let out = tmp("never.csv");
    let status = ghznet(&[
        "parent-rate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
    fs::remove_file(cfg).ok();
}

#[test]
fn unwritable_out_is_io_error() {
    let status = ghznet(&["parent-rate", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(status.code(), Some(3));
}

#[test]
fn bad_metric_rejected_by_parser() {
    let status = ghznet(&["boundary", "--metric", "speed", "--out", "/tmp/x.csv"]);
    assert_ne!(status.code(), Some(0));
}

#[test]
fn config_file_drives_the_sweep() {
    let cfg = tmp("sweep.json");
    fs::write(
        &cfg,
        r#"{
            "params": { "n_users": 4, "p_mem": 0.999 },
            "axes": [ { "field": "parallel_attempts", "min": 1, "max": 5, "steps": 5 } ],
            "seed": 3
        }"#,
    )
    .unwrap();
    let out = tmp("sweep.csv");
    let status = ghznet(&[
        "parent-rate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.contains(r#""n_users":4"#), "config echo reflects the file");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 6);
    fs::remove_file(cfg).ok();
    fs::remove_file(out).ok();
}
