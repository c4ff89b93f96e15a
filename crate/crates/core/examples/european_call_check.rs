//! Prices a European call with the contract PDE solver and compares it with
//! the closed form, then measures the spatial convergence order.
//!
//!     cargo run --release --example european_call_check

use gmwb::grid::GridPreset;
use gmwb::harness::{call_domain, call_errors, CALL_CASE};

fn main() -> gmwb::Result<()> {
    let (k, t, r, sigma, q) = CALL_CASE;
    println!("K = {k}, T = {t}, r = {r}, sigma = {sigma}, yield = {q}; errors over [0.5K, 2K]");
    let grid = GridPreset::Paper.config();
    let wmax = call_domain(&grid);
    println!("{:>6} {:>10} {:>12} {:>12} {:>12} {:>8}", "nodes", "h", "max|err|", "err/maxV", "pointwise", "ratio");
    let mut prev: Option<f64> = None;
    for intervals in [100, 200, 400, 800, 1600] {
        let e = call_errors(wmax, intervals, 1000)?;
        let ratio = prev.map_or(String::new(), |p| format!("{:.2}", p / e.max_abs));
        println!(
            "{:>6} {:>10.5} {:>12.3e} {:>12.3e} {:>12.3e} {:>8}",
            intervals + 1,
            e.spacing,
            e.max_abs,
            e.norm_relative,
            e.max_relative,
            ratio
        );
        prev = Some(e.max_abs);
    }
    Ok(())
}
