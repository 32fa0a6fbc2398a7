//! Byte-exact regression fixtures for every output format. The fixtures are
//! self-generated (the figures they mirror carry no published numbers);
//! regenerate with `GHZNET_REGEN_GOLDEN=1 cargo test -p ghznet-cli --test
//! golden` after an intentional output change.

use std::fs;
use std::path::PathBuf;

use ghznet_cli::{
    run_decision_boundary, run_distance_curves, run_parent_fidelity_sweep, run_parent_rate_sweep,
    run_validation, Metric, SweepConfig,
};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn check(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("GHZNET_REGEN_GOLDEN").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing fixture {name}; regenerate with GHZNET_REGEN_GOLDEN=1"));
    assert_eq!(
        expected, actual,
        "{name} drifted from its fixture; regenerate deliberately if intended"
    );
}

fn golden_config() -> SweepConfig {
    SweepConfig {
        trials: Some(2_000),
        seed: 7,
        ..SweepConfig::default()
    }
}

#[test]
fn parent_fidelity_csv() {
    let csv = run_parent_fidelity_sweep(&golden_config()).unwrap();
    assert!(csv.ends_with('\n'));
    assert!(!csv.contains('\r'), "LF endings only");
    check("parent_fidelity.csv", &csv);
}

#[test]
fn parent_rate_csv() {
    check(
        "parent_rate.csv",
        &run_parent_rate_sweep(&golden_config()).unwrap(),
    );
}

#[test]
fn boundary_fidelity_csv() {
    let (grid, csv) = run_decision_boundary(&golden_config(), Metric::Fidelity).unwrap();
    assert_eq!(grid.m1.len(), grid.noise_axis.steps * grid.distance_axis.steps);
    check("boundary_fidelity.csv", &csv);
}

#[test]
fn boundary_rate_csv() {
    let (_, csv) = run_decision_boundary(&golden_config(), Metric::Rate).unwrap();
    check("boundary_rate.csv", &csv);
}

#[test]
fn curves_rate_csv() {
    check(
        "curves_rate.csv",
        &run_distance_curves(&golden_config(), Metric::Rate).unwrap(),
    );
}

#[test]
fn curves_fidelity_csv() {
    check(
        "curves_fidelity.csv",
        &run_distance_curves(&golden_config(), Metric::Fidelity).unwrap(),
    );
}

#[test]
fn validation_report_json() {
    let config = SweepConfig {
        trials: Some(20_000),
        seed: 7,
        ..SweepConfig::default()
    };
    let report = run_validation(&config).unwrap();
    assert!(report.hard_failures.is_empty(), "{:?}", report.hard_failures);
    check("validate.json", &report.to_json());
}
