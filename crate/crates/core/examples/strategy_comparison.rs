//! Shows where liability_max and value_max withdraw differently once a
//! management fee makes staying invested costly.
//!
//!     cargo run --release --example strategy_comparison

use gmwb::dp::{price, StrategyKind};
use gmwb::grid::GridPreset;
use gmwb::model::{build_contract, FeeSchedule, MarketParams};

fn main() -> gmwb::Result<()> {
    let contract = build_contract(10.0, 1, 0.10, 1.0, 1.0)?;
    let market = MarketParams::new(0.05, 0.10)?;
    let fees = FeeSchedule::new(0.02, 0.005)?;
    let grid = GridPreset::Fast.config();

    let lm = price(&contract, &market, &fees, StrategyKind::LiabilityMax, &grid)?;
    let vm = price(&contract, &market, &fees, StrategyKind::ValueMax, &grid)?;
    println!("V0: liability_max {:.6}, value_max {:.6}", lm.v0, vm.v0);
    println!("L0: liability_max {:.6}, value_max {:.6}", lm.l0, vm.l0);

    let wealth = [0.1, 0.3, 0.6, 1.0, 1.5, 2.5];
    for year in [1, 5, 9] {
        println!("\nyear {year}, guarantee A = 0.5");
        println!("{:>6} {:>10} {:>10}", "W", "gamma_L", "gamma_V");
        for w in wealth {
            println!("{w:>6.2} {:>10.3} {:>10.3}", lm.policy.lookup(year, w, 0.5), vm.policy.lookup(year, w, 0.5));
        }
    }
    Ok(())
}
