//! Cross-checks the PDE price of the contractual withdrawal policy against
//! Monte Carlo simulation of the same policy.
//!
//!     cargo run --release --example mc_validation -- [num_paths]

use gmwb::dp::{price, StrategyKind};
use gmwb::grid::GridPreset;
use gmwb::mc::{simulate, MCSettings};
use gmwb::model::{build_contract, FeeSchedule, MarketParams};

fn main() -> gmwb::Result<()> {
    let num_paths = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200_000);
    let contract = build_contract(10.0, 1, 0.20, 1.0, 1.0)?;
    let market = MarketParams::new(0.05, 0.30)?;
    let fees = FeeSchedule::new(0.02, 0.03)?;

    let pde = price(&contract, &market, &fees, StrategyKind::StaticContractual, &GridPreset::Paper.config())?;
    let settings = MCSettings {
        num_paths,
        ..MCSettings::default()
    };
    let mc = simulate(&pde.policy, &contract, &market, &fees, &settings)?;

    println!("paths {}", mc.value.num_paths);
    println!("V0: PDE {:.6}  MC {:.6} +- {:.6}  ({:.2} se)", pde.v0, mc.value.mean, mc.value.std_error, mc.value.z_score(pde.v0));
    println!("L0: PDE {:.6}  MC {:.6} +- {:.6}", pde.l0, mc.liability.mean, mc.liability.std_error);
    println!("M0: PDE {:.6}  MC {:.6} +- {:.6}", pde.m0, mc.management_fees.mean, mc.management_fees.std_error);
    Ok(())
}
