use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Scenario};
use crate::dp::StrategyKind;
use crate::error::Result;
use crate::fair_fee::solve_fair_fee;

/// Outcome of one (scenario, alpha_m, strategy) calibration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub scenario: Scenario,
    pub alpha_m: f64,
    pub strategy: StrategyKind,
    /// Fair insurance fee as a decimal; `None` when calibration failed.
    pub fee: Option<f64>,
    pub v0: Option<f64>,
    pub l0: Option<f64>,
    pub m0: Option<f64>,
    pub m0_direct: Option<f64>,
    pub evaluations: usize,
    pub error: Option<String>,
}

/// Results in declaration order: scenario, then alpha_m, then strategy.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub scenarios: Vec<Scenario>,
    pub alpha_m: Vec<f64>,
    pub strategies: Vec<StrategyKind>,
    pub cells: Vec<CellResult>,
    pub wall_time_secs: f64,
}

impl Sweep {
    pub fn cell(&self, scenario: usize, alpha: usize, strategy: StrategyKind) -> Option<&CellResult> {
        let k = self.strategies.iter().position(|&s| s == strategy)?;
        let per_scenario = self.alpha_m.len() * self.strategies.len();
        self.cells.get(scenario * per_scenario + alpha * self.strategies.len() + k)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.fee.is_none())
    }
}

/// Calibrates one cell; errors are kept in the result.
pub fn run_cell(config: &ExperimentConfig, scenario: Scenario, alpha_m: f64, strategy: StrategyKind) -> CellResult {
    let mut cell = CellResult {
        scenario,
        alpha_m,
        strategy,
        fee: None,
        v0: None,
        l0: None,
        m0: None,
        m0_direct: None,
        evaluations: 0,
        error: None,
    };
    let solved = scenario.market().and_then(|market| {
        let contract = scenario.contract(config)?;
        solve_fair_fee(&contract, &market, alpha_m, strategy, &config.calibration, &config.grid)
    });
    match solved {
        Ok(f) => {
            cell.fee = Some(f.alpha_ins);
            cell.v0 = Some(f.pricing.v0);
            cell.l0 = Some(f.pricing.l0);
            cell.m0 = Some(f.pricing.m0);
            cell.m0_direct = f.pricing.diagnostics.m0_direct;
            cell.evaluations = f.evaluations;
        }
        Err(e) => {
            warn!(
                "calibration failed for {} alpha_m={} {strategy}: {e}",
                scenario.tag(),
                alpha_m
            );
            cell.error = Some(e.to_string());
        }
    }
    cell
}

/// Runs every cell on the configured worker pool. Output order does not
/// depend on completion order.
pub fn run_sweep(
    config: &ExperimentConfig,
    scenarios: &[Scenario],
    strategies: &[StrategyKind],
) -> Result<Sweep> {
    let started = Instant::now();
    let jobs: Vec<(Scenario, f64, StrategyKind)> = scenarios
        .iter()
        .flat_map(|&s| {
            config
                .alpha_m
                .iter()
                .flat_map(move |&a| strategies.iter().map(move |&k| (s, a, k)))
        })
        .collect();
    let pool = config.thread_pool()?;
    let cells = pool.install(|| {
        jobs.par_iter()
            .with_max_len(1)
            .map(|&(s, a, k)| run_cell(config, s, a, k))
            .collect()
    });
    Ok(Sweep {
        scenarios: scenarios.to_vec(),
        alpha_m: config.alpha_m.clone(),
        strategies: strategies.to_vec(),
        cells,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

fn strategy_suffix(s: StrategyKind) -> &'static str {
    match s {
        StrategyKind::LiabilityMax => "liability",
        StrategyKind::ValueMax => "value",
        StrategyKind::StaticContractual => "static",
    }
}

fn fmt4(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.4}"),
        _ => "NaN".to_string(),
    }
}

/// Writes one table: a row per scenario, a column per alpha_m.
fn write_table(
    path: &Path,
    sweep: &Sweep,
    strategy: StrategyKind,
    value: impl Fn(&CellResult) -> Option<f64>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    let mut header = vec!["r".to_string(), "sigma".into(), "beta".into(), "T".into()];
    header.extend(sweep.alpha_m.iter().map(|a| format!("alpha_m={a:.4}")));
    w.write_record(&header)?;
    for (si, s) in sweep.scenarios.iter().enumerate() {
        let mut row = vec![
            format!("{:.4}", s.r),
            format!("{:.4}", s.sigma),
            format!("{:.4}", s.beta),
            format!("{}", s.maturity),
        ];
        for ai in 0..sweep.alpha_m.len() {
            row.push(fmt4(sweep.cell(si, ai, strategy).and_then(&value)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'static str,
    generated_unix_secs: u64,
    wall_time_secs: f64,
    workers: usize,
    grid: &'a crate::grid::GridConfig,
    calibration: &'a crate::fair_fee::CalibrationSettings,
    scenarios: usize,
    alpha_m: &'a [f64],
    strategies: &'a [StrategyKind],
    failures: Vec<&'a CellResult>,
}

fn write_metadata(path: &Path, config: &ExperimentConfig, sweep: &Sweep) -> Result<()> {
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        generated_unix_secs: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_time_secs: sweep.wall_time_secs,
        workers: config.workers,
        grid: &config.grid,
        calibration: &config.calibration,
        scenarios: sweep.scenarios.len(),
        alpha_m: &sweep.alpha_m,
        strategies: &sweep.strategies,
        failures: sweep.failures().collect(),
    };
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Fair-fee and policy-value tables for every configured strategy.
pub fn run_tables(config: &ExperimentConfig) -> Result<(Sweep, Vec<PathBuf>)> {
    config.validate()?;
    let dir = config.prepare_output_dir()?;
    let sweep = run_sweep(config, &config.scenarios, &config.strategies)?;
    let paths = write_tables(dir, &sweep)?;
    write_metadata(&dir.join("tables_metadata.json"), config, &sweep)?;
    Ok((sweep, paths))
}

/// Writes `fair_fees_<s>.csv` (percent) and `policy_values_<s>.csv`.
pub fn write_tables(dir: &Path, sweep: &Sweep) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for &strategy in &sweep.strategies {
        let suffix = strategy_suffix(strategy);
        let fees = dir.join(format!("fair_fees_{suffix}.csv"));
        write_table(&fees, sweep, strategy, |c| c.fee.map(|f| 100.0 * f))?;
        let values = dir.join(format!("policy_values_{suffix}.csv"));
        write_table(&values, sweep, strategy, |c| c.v0)?;
        paths.push(fees);
        paths.push(values);
    }
    Ok(paths)
}

/// Scenarios plotted against alpha_m: two market regimes, both penalty
/// rates and all three maturities.
pub fn figure_scenarios() -> Vec<Scenario> {
    let mut out = Vec::with_capacity(12);
    for (r, sigma) in [(0.01, 0.30), (0.05, 0.10)] {
        for beta in [0.10, 0.20] {
            for maturity in [5.0, 10.0, 20.0] {
                out.push(Scenario::new(r, sigma, beta, maturity));
            }
        }
    }
    out
}

/// A series row where the liability-max fee falls below the value-max fee.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceViolation {
    pub scenario: Scenario,
    pub alpha_m: f64,
    pub fee_liability: f64,
    pub fee_value: f64,
}

#[derive(Debug, Clone)]
pub struct FigureData {
    pub sweep: Sweep,
    pub files: Vec<PathBuf>,
    pub violations: Vec<DominanceViolation>,
}

/// One series file per figure scenario with both strategies side by side.
pub fn emit_figure_data(config: &ExperimentConfig) -> Result<FigureData> {
    config.validate()?;
    let dir = config.prepare_output_dir()?;
    let strategies = [StrategyKind::LiabilityMax, StrategyKind::ValueMax];
    let sweep = run_sweep(config, &figure_scenarios(), &strategies)?;
    let (files, violations) = write_figure_series(dir, &sweep)?;
    Ok(FigureData {
        sweep,
        files,
        violations,
    })
}

pub fn write_figure_series(dir: &Path, sweep: &Sweep) -> Result<(Vec<PathBuf>, Vec<DominanceViolation>)> {
    let mut files = Vec::new();
    let mut violations = Vec::new();
    for (si, s) in sweep.scenarios.iter().enumerate() {
        let path = dir.join(format!("figure_{}.csv", s.tag()));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path)?;
        w.write_record(["alpha_m", "fee_liability_pct", "fee_value_pct", "V0_liability", "V0_value"])?;
        for (ai, &a) in sweep.alpha_m.iter().enumerate() {
            let lm = sweep.cell(si, ai, StrategyKind::LiabilityMax);
            let vm = sweep.cell(si, ai, StrategyKind::ValueMax);
            let fee_l = lm.and_then(|c| c.fee);
            let fee_v = vm.and_then(|c| c.fee);
            if let (Some(l), Some(v)) = (fee_l, fee_v) {
                if l < v - 1e-6 {
                    warn!("{}: liability-max fee below value-max fee at alpha_m={a}", s.tag());
                    violations.push(DominanceViolation {
                        scenario: *s,
                        alpha_m: a,
                        fee_liability: l,
                        fee_value: v,
                    });
                }
            }
            w.write_record([
                format!("{a:.4}"),
                fmt4(fee_l.map(|f| 100.0 * f)),
                fmt4(fee_v.map(|f| 100.0 * f)),
                fmt4(lm.and_then(|c| c.v0)),
                fmt4(vm.and_then(|c| c.v0)),
            ])?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok((files, violations))
}
