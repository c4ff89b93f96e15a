//! Runs a reduced table sweep and writes the CSV tables to a directory.
//!
//!     cargo run --release --example sweep_tables -- [out_dir]

use gmwb::grid::GridPreset;
use gmwb::harness::{run_tables, ExperimentConfig, Scenario};

fn main() -> gmwb::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "output/example_tables".into());
    let mut config = ExperimentConfig::from_json(r#"{"alpha_m": [0.0, 0.005, 0.01, 0.015, 0.02]}"#)?;
    config.scenarios = vec![Scenario::new(0.01, 0.30, 0.10, 5.0), Scenario::new(0.05, 0.10, 0.20, 10.0)];
    config.grid = config.grid.with_preset(GridPreset::Fast);
    config.output_dir = out.into();

    let (sweep, paths) = run_tables(&config)?;
    for p in &paths {
        println!("== {}", p.display());
        print!("{}", std::fs::read_to_string(p)?);
    }
    println!("{} cells in {:.1}s", sweep.cells.len(), sweep.wall_time_secs);
    Ok(())
}
