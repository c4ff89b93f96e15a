use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gmwb::dp::{price, StrategyKind};
use gmwb::fair_fee::solve_fair_fee;
use gmwb::grid::GridPreset;
use gmwb::harness::{emit_figure_data, run_tables, validate, ExperimentConfig, Scenario};
use gmwb::model::FeeSchedule;
use gmwb::GmwbError;

#[derive(Parser)]
#[command(name = "gmwb", version, about = "GMWB rider pricing and fair-fee tables")]
struct Cli {
    /// JSON experiment config; defaults reproduce the full table set.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Seed for the Monte Carlo checks.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["fast", "paper", "fine"])]
    grid_preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fair-fee and policy-value tables over the scenario sweep.
    Tables,
    /// Per-scenario series of fees and values against alpha_m.
    Figures,
    /// Runs the invariant suite; exits 1 if any check fails.
    Validate,
    /// Prices one contract at given fees and prints V0, L0 and M0.
    Price {
        #[command(flatten)]
        case: Case,
        #[arg(long, default_value_t = 0.0)]
        alpha_ins: f64,
    },
    /// Calibrates the insurance fee for one contract.
    FairFee {
        #[command(flatten)]
        case: Case,
    },
}

#[derive(Args)]
struct Case {
    #[arg(long)]
    r: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    beta: f64,
    /// Maturity in years.
    #[arg(long)]
    maturity: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha_m: f64,
    #[arg(long, default_value = "liability_max")]
    strategy: String,
}

fn load_config(cli: &Cli) -> gmwb::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(seed) = cli.seed {
        config.mc_validation.settings.seed = seed;
    }
    if let Some(preset) = &cli.grid_preset {
        config.grid = config.grid.with_preset(preset.parse::<GridPreset>()?);
    }
    config.validate()?;
    Ok(config)
}

fn single_case(config: &ExperimentConfig, case: &Case) -> gmwb::Result<(Scenario, StrategyKind)> {
    let scenario = Scenario::new(case.r, case.sigma, case.beta, case.maturity);
    scenario.market()?;
    scenario.contract(config)?;
    Ok((scenario, case.strategy.parse()?))
}

/// Returns `Ok(false)` when validation checks fail.
fn run(cli: &Cli) -> gmwb::Result<bool> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Tables => {
            let (sweep, paths) = run_tables(&config)?;
            for p in &paths {
                println!("wrote {}", p.display());
            }
            let failed = sweep.failures().count();
            println!("{} cells, {failed} failed, {:.1}s", sweep.cells.len(), sweep.wall_time_secs);
        }
        Command::Figures => {
            let data = emit_figure_data(&config)?;
            for p in &data.files {
                println!("wrote {}", p.display());
            }
            if !data.violations.is_empty() {
                println!("{} rows with liability-max fee below value-max fee", data.violations.len());
            }
        }
        Command::Validate => {
            let report = validate(&config)?;
            for check in &report.checks {
                println!("{check}");
            }
            return Ok(report.passed());
        }
        Command::Price { case, alpha_ins } => {
            let (scenario, strategy) = single_case(&config, case)?;
            let fees = FeeSchedule::new(case.alpha_m, *alpha_ins)?;
            let pool = config.thread_pool()?;
            let res = pool.install(|| {
                price(&scenario.contract(&config)?, &scenario.market()?, &fees, strategy, &config.grid)
            })?;
            println!("strategy {strategy}");
            println!("V0 {:.8}", res.v0);
            println!("L0 {:.8}", res.l0);
            println!("M0 {:.8}", res.m0);
            if let Some(m) = res.diagnostics.m0_direct {
                println!("M0 (accumulated) {m:.8}");
            }
        }
        Command::FairFee { case } => {
            let (scenario, strategy) = single_case(&config, case)?;
            let pool = config.thread_pool()?;
            let fee = pool.install(|| {
                solve_fair_fee(
                    &scenario.contract(&config)?,
                    &scenario.market()?,
                    case.alpha_m,
                    strategy,
                    &config.calibration,
                    &config.grid,
                )
            })?;
            println!("strategy {strategy}");
            println!("fair fee {:.4}%", 100.0 * fee.alpha_ins);
            println!("V0 {:.6}", fee.pricing.v0);
            println!("evaluations {}", fee.evaluations);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (GmwbError::Config(_) | GmwbError::Validation { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
