//! Prices one contract under each withdrawal strategy at fixed fees.
//!
//!     cargo run --release --example price_contract

use gmwb::dp::{price, StrategyKind};
use gmwb::grid::GridPreset;
use gmwb::model::{build_contract, FeeSchedule, MarketParams};

fn main() -> gmwb::Result<()> {
    // Ten annual withdrawals of 0.1, 10% penalty on excess withdrawals.
    let contract = build_contract(10.0, 1, 0.10, 1.0, 1.0)?;
    let market = MarketParams::new(0.03, 0.20)?;
    let fees = FeeSchedule::new(0.01, 0.006)?;
    let grid = GridPreset::Paper.config();

    println!("{:<20} {:>10} {:>10} {:>10} {:>10}", "strategy", "V0", "L0", "M0", "seconds");
    for strategy in [StrategyKind::LiabilityMax, StrategyKind::ValueMax, StrategyKind::StaticContractual] {
        let p = price(&contract, &market, &fees, strategy, &grid)?;
        println!(
            "{:<20} {:>10.6} {:>10.6} {:>10.6} {:>10.2}",
            strategy.as_str(),
            p.v0,
            p.l0,
            p.m0,
            p.diagnostics.wall_time.as_secs_f64()
        );
    }

    // Withdrawals chosen at the first anniversary, full guarantee.
    let p = price(&contract, &market, &fees, StrategyKind::LiabilityMax, &grid)?;
    println!("\nliability_max withdrawal at year 1, A = 1:");
    for w in [0.0, 0.05, 0.2, 0.5, 1.0, 2.0] {
        println!("  W = {w:<5} gamma = {:.3}", p.policy.lookup(1, w, 1.0));
    }
    Ok(())
}
