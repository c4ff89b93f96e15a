use gmwb::dp::{price, StrategyKind};
use gmwb::grid::{GridConfig, GridPreset, ValueSurface, WealthGrid};
use gmwb::harness::{call_domain, call_errors};
use gmwb::model::{build_contract, FeeSchedule, MarketParams};
use gmwb::pde::{advance_interval, SurfaceJob};

#[test]
fn european_call_matches_closed_form() {
    let cfg = GridPreset::Paper.config();
    let e = call_errors(call_domain(&cfg), cfg.num_wealth_nodes - 1, cfg.steps_per_year).unwrap();
    println!("{e:?}");
    assert!(e.norm_relative < 1e-4, "{e:?}");
    assert!(e.max_abs < 1e-4);
}

#[test]
fn european_call_spatial_order_two() {
    let cfg = GridPreset::Paper.config();
    let wmax = call_domain(&cfg);
    let coarse = call_errors(wmax, 400, 1000).unwrap();
    let fine = call_errors(wmax, 800, 1000).unwrap();
    let ratio = coarse.max_abs / fine.max_abs;
    println!("error ratio {ratio}");
    assert!(ratio >= 3.5, "ratio {ratio}");
}

fn smooth_rollback(steps_per_year: usize) -> Vec<f64> {
    let grid = WealthGrid::uniform(6.0, 300).unwrap();
    let market = MarketParams::new(0.04, 0.25).unwrap();
    let mut s = ValueSurface::zeros(1, grid.len());
    for (v, &w) in s.row_mut(0).iter_mut().zip(grid.nodes()) {
        *v = w * w / (1.0 + w);
    }
    advance_interval(
        &mut [SurfaceJob {
            surface: &mut s,
            source_rate: 0.0,
        }],
        &grid,
        0.0,
        1.0,
        &market,
        0.02,
        steps_per_year,
    )
    .unwrap();
    s.row(0).to_vec()
}

#[test]
fn time_stepping_is_second_order() {
    let a = smooth_rollback(20);
    let b = smooth_rollback(40);
    let c = smooth_rollback(80);
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let ratio = diff(&a, &b) / diff(&b, &c);
    println!("Richardson ratio {ratio}");
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

/// Rolls back V (terminal payoff `w`), L (terminal 0) and the fee surface
/// M over one year, with `l_sign` multiplying the insurance-fee source.
fn one_year_surfaces(l_sign: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let grid = WealthGrid::uniform(5.0, 200).unwrap();
    let market = MarketParams::new(0.03, 0.2).unwrap();
    let fees = FeeSchedule::new(0.01, 0.015).unwrap();
    let mut v = ValueSurface::zeros(1, grid.len());
    v.row_mut(0).copy_from_slice(grid.nodes());
    let mut l = ValueSurface::zeros(1, grid.len());
    let mut m = ValueSurface::zeros(1, grid.len());
    advance_interval(
        &mut [
            SurfaceJob {
                surface: &mut v,
                source_rate: 0.0,
            },
            SurfaceJob {
                surface: &mut l,
                source_rate: -l_sign * fees.alpha_ins(),
            },
            SurfaceJob {
                surface: &mut m,
                source_rate: fees.alpha_m(),
            },
        ],
        &grid,
        0.0,
        1.0,
        &market,
        fees.alpha_tot(),
        100,
    )
    .unwrap();
    (grid.nodes().to_vec(), v.row(0).to_vec(), l.row(0).to_vec(), m.row(0).to_vec())
}

#[test]
fn fee_income_matches_closed_form() {
    let (w, _, l, m) = one_year_surfaces(1.0);
    // PV of a proportional fee on wealth decaying at the total fee rate.
    // The time stepping is only second order, so allow O(dt^2) per unit wealth.
    let (a_ins, a_m, a_tot) = (0.015, 0.01, 0.025);
    let pv = |rate: f64, w: f64| w * rate / a_tot * (1.0 - (-a_tot).exp());
    for i in (0..w.len()).step_by(10) {
        let tol = 1e-6 * w[i] + 1e-14;
        assert!((l[i] + pv(a_ins, w[i])).abs() < tol, "node {i}");
        assert!((m[i] - pv(a_m, w[i])).abs() < tol, "node {i}");
    }
}

#[test]
fn identity_detects_flipped_source_sign() {
    let residual = |(w, v, l, m): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)| {
        (0..w.len())
            .map(|i| (l[i] + w[i] - v[i] - m[i]).abs())
            .fold(0.0, f64::max)
    };
    let good = residual(one_year_surfaces(1.0));
    let bad = residual(one_year_surfaces(-1.0));
    assert!(good < 1e-10, "{good}");
    assert!(bad > 1e-2, "{bad}");
}

#[test]
fn far_field_truncation_is_negligible() {
    // Same spacing, twice the domain.
    let contract = build_contract(20.0, 1, 0.1, 1.0, 1.0).unwrap();
    let market = MarketParams::new(0.05, 0.3).unwrap();
    let fees = FeeSchedule::new(0.0, 0.02).unwrap();
    let base = GridPreset::Paper.config();
    let doubled = GridConfig {
        num_wealth_nodes: 2 * (base.num_wealth_nodes - 1) + 1,
        wealth_cap_multiple: 2.0 * base.wealth_cap_multiple,
        ..base
    };
    let a = price(&contract, &market, &fees, StrategyKind::StaticContractual, &base).unwrap();
    let b = price(&contract, &market, &fees, StrategyKind::StaticContractual, &doubled).unwrap();
    assert!((a.diagnostics.wealth_max * 2.0 - b.diagnostics.wealth_max).abs() < 1e-12);
    let dv = (a.v0 - b.v0).abs();
    println!("V0 change on doubling the domain: {dv:e}");
    assert!(dv < 1e-6, "{dv}");
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

    #[test]
    fn constant_data_discounts_exactly(
        r in 0.0f64..0.1,
        sigma in 0.05f64..0.5,
        alpha in 0.0f64..0.05,
        tau in 0.05f64..2.0,
        spy in 5usize..60,
    ) {
        let grid = WealthGrid::uniform(4.0, 80).unwrap();
        let market = MarketParams::new(r, sigma).unwrap();
        let mut s = ValueSurface::zeros(1, grid.len());
        s.row_mut(0).fill(0.7);
        advance_interval(
            &mut [SurfaceJob { surface: &mut s, source_rate: 0.0 }],
            &grid,
            0.0,
            tau,
            &market,
            alpha,
            spy,
        )
        .unwrap();
        let exact = 0.7 * (-r * tau).exp();
        for &v in s.row(0) {
            proptest::prop_assert!((v - exact).abs() <= 1e-10 * exact);
        }
    }
}
