use std::process::Command;

use gmwb::dp::StrategyKind;
use gmwb::grid::GridPreset;
use gmwb::harness::{
    default_alpha_m, default_scenarios, figure_scenarios, run_tables, write_figure_series, write_tables, ExperimentConfig, Scenario, Sweep,
};

fn small_config(out: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        scenarios: vec![Scenario::new(0.05, 0.10, 0.10, 5.0)],
        alpha_m: vec![0.0, 0.01],
        workers: 1,
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    };
    c.grid = c.grid.with_preset(GridPreset::Fast);
    c.mc_validation.enabled = false;
    c
}

#[test]
fn tables_have_one_row_per_scenario_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let (sweep, paths) = run_tables(&small_config(&a)).unwrap();
    run_tables(&small_config(&b)).unwrap();
    assert_eq!(sweep.failures().count(), 0);
    assert_eq!(paths.len(), 4);
    for p in &paths {
        let name = p.file_name().unwrap();
        let first = std::fs::read(p).unwrap();
        assert_eq!(first, std::fs::read(b.join(name)).unwrap(), "{name:?}");
        let text = String::from_utf8(first).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "r,sigma,beta,T,alpha_m=0.0000,alpha_m=0.0100");
        assert_eq!(lines[1].split(',').count(), 6);
    }
    let values = std::fs::read_to_string(a.join("policy_values_liability.csv")).unwrap();
    let v0: f64 = values.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!((v0 - 1.0).abs() < 1e-4);
    assert!(a.join("tables_metadata.json").exists());
}

#[test]
fn single_cell_config_gives_one_by_one_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path());
    c.alpha_m = vec![0.004];
    c.strategies = vec![StrategyKind::ValueMax];
    let (_, paths) = run_tables(&c).unwrap();
    assert_eq!(paths.len(), 2);
    for p in &paths {
        let text = std::fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 5);
        assert!(lines[1].starts_with("0.0500,0.1000,0.1000,5,"));
    }
}

#[test]
fn default_sweep_shape_with_failed_cells() {
    // No cells at all: every entry is a failed calibration.
    let dir = tempfile::tempdir().unwrap();
    let sweep = Sweep {
        scenarios: default_scenarios(),
        alpha_m: default_alpha_m(),
        strategies: vec![StrategyKind::LiabilityMax, StrategyKind::ValueMax],
        cells: vec![],
        wall_time_secs: 0.0,
    };
    let paths = write_tables(dir.path(), &sweep).unwrap();
    let names: Vec<_> = paths.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
    assert_eq!(
        names,
        ["fair_fees_liability.csv", "policy_values_liability.csv", "fair_fees_value.csv", "policy_values_value.csv"]
    );
    let text = std::fs::read_to_string(&paths[0]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 25);
    assert!(lines[0].ends_with("alpha_m=0.0180,alpha_m=0.0200"));
    assert_eq!(lines[1], "0.0100,0.1000,0.1000,5,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN");
    assert!(!text.contains('\r'));
}

#[test]
fn figure_scenarios_cover_both_regimes() {
    let all = figure_scenarios();
    assert_eq!(all.len(), 12);
    for (r, sigma) in [(0.01, 0.30), (0.05, 0.10)] {
        assert_eq!(all.iter().filter(|s| s.r == r && s.sigma == sigma).count(), 6);
    }
}

#[test]
fn figure_series_without_alpha_values_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = Sweep {
        scenarios: vec![Scenario::new(0.01, 0.30, 0.20, 10.0)],
        alpha_m: vec![],
        strategies: vec![StrategyKind::LiabilityMax, StrategyKind::ValueMax],
        cells: vec![],
        wall_time_secs: 0.0,
    };
    let (files, violations) = write_figure_series(dir.path(), &sweep).unwrap();
    assert!(violations.is_empty());
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(text, "alpha_m,fee_liability_pct,fee_value_pct,V0_liability,V0_value\n");
}

fn gmwb(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gmwb")).args(args).output().unwrap()
}

#[test]
fn cli_price_succeeds() {
    let out = gmwb(&[
        "--grid-preset", "fast", "price", "--r", "0.05", "--sigma", "0.2", "--beta", "0.1", "--maturity", "5",
        "--alpha-ins", "0.01",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("V0 "));
}

#[test]
fn cli_configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpha_m": [0.2]}"#).unwrap();
    let out = gmwb(&["--config", bad.to_str().unwrap(), "tables"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&bad, r#"{"no_such_field": 1}"#).unwrap();
    assert_eq!(gmwb(&["--config", bad.to_str().unwrap(), "tables"]).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(gmwb(&["--config", missing.to_str().unwrap(), "validate"]).status.code(), Some(2));

    let out = gmwb(&["price", "--r", "0.05", "--sigma", "-0.2", "--beta", "0.1", "--maturity", "5"]);
    assert_eq!(out.status.code(), Some(2));

    let out = gmwb(&["--grid-preset", "huge", "validate"]);
    assert_eq!(out.status.code(), Some(2));
}
