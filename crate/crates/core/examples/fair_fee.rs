//! Calibrates the fair insurance fee across a range of management fees.
//!
//!     cargo run --release --example fair_fee -- [r sigma beta T]

use gmwb::dp::StrategyKind;
use gmwb::fair_fee::{solve_fair_fee, CalibrationSettings};
use gmwb::grid::GridPreset;
use gmwb::model::{build_contract, MarketParams};

fn main() -> gmwb::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (r, sigma, beta, maturity) = match args[..] {
        [r, s, b, t] => (r, s, b, t),
        _ => (0.05, 0.30, 0.20, 10.0),
    };
    let contract = build_contract(maturity, 1, beta, 1.0, 1.0)?;
    let market = MarketParams::new(r, sigma)?;
    let grid = GridPreset::Fast.config();
    let settings = CalibrationSettings::default();

    println!("r = {r}, sigma = {sigma}, beta = {beta}, T = {maturity} (preset fast)");
    println!("{:>8} {:>12} {:>12} {:>6}", "alpha_m", "fee_L (%)", "fee_V (%)", "evals");
    for i in 0..=5 {
        let alpha_m = 0.004 * i as f64;
        let l = solve_fair_fee(&contract, &market, alpha_m, StrategyKind::LiabilityMax, &settings, &grid)?;
        let v = solve_fair_fee(&contract, &market, alpha_m, StrategyKind::ValueMax, &settings, &grid)?;
        println!(
            "{alpha_m:>8.3} {:>12.4} {:>12.4} {:>6}",
            100.0 * l.alpha_ins,
            100.0 * v.alpha_ins,
            l.evaluations + v.evaluations
        );
    }
    Ok(())
}
