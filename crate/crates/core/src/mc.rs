//! Monte Carlo valuation of a frozen withdrawal policy.
//!
//! Wealth is stepped with the exact log-normal transition. Sub-steps exist
//! only to integrate the insurance fee income with the trapezoid rule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::PolicyTable;
use crate::error::{GmwbError, Result};
use crate::events::{ContractBehavior, StandardGmwb};
use crate::model::{ContractSpec, FeeSchedule, MarketParams, PolicyState};

/// State of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCPathState {
    /// Index level; follows the same Brownian driver as wealth.
    pub s: f64,
    pub w: f64,
    pub a: f64,
    /// `exp(-r t)`.
    pub discount: f64,
    /// Present value of insurance fees collected so far.
    pub fee_income_pv: f64,
}

impl MCPathState {
    pub fn new(contract: &ContractSpec) -> Self {
        Self {
            s: 1.0,
            w: contract.initial_wealth,
            a: contract.initial_guarantee,
            discount: 1.0,
            fee_income_pv: 0.0,
        }
    }

    /// Advances by `dt` with standard normal shock `z`, accruing the
    /// insurance fee by the trapezoid rule.
    pub fn advance(&mut self, dt: f64, z: f64, market: &MarketParams, fees: &FeeSchedule) {
        let vol = market.sigma * dt.sqrt() * z;
        let half_var = 0.5 * market.sigma * market.sigma * dt;
        let before = self.discount * self.w;
        self.s *= (market.r * dt - half_var + vol).exp();
        self.w *= ((market.r - fees.alpha_tot()) * dt - half_var + vol).exp();
        self.discount *= (-market.r * dt).exp();
        let after = self.discount * self.w;
        self.fee_income_pv += 0.5 * dt * fees.alpha_ins() * (before + after);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub num_paths: usize,
}

impl MCEstimate {
    /// `|mean - target| / std_error`; infinite if the error is zero and the
    /// values differ.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MCSettings {
    pub num_paths: usize,
    pub seed: u64,
    pub sub_steps_per_year: usize,
    pub antithetic: bool,
}

impl Default for MCSettings {
    fn default() -> Self {
        Self {
            num_paths: 1_000_000,
            seed: 20_240_601,
            sub_steps_per_year: 12,
            antithetic: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCValuation {
    pub value: MCEstimate,
    pub liability: MCEstimate,
    /// `L + W0 - V`, estimated path by path.
    pub management_fees: MCEstimate,
}

/// Per-path discounted totals.
#[derive(Debug, Clone, Copy, Default)]
struct PathSample {
    value: f64,
    liability: f64,
}

struct Simulator<'a> {
    policy: &'a PolicyTable,
    contract: &'a ContractSpec,
    behavior: StandardGmwb,
    market: &'a MarketParams,
    fees: &'a FeeSchedule,
    /// Sub-step count and length for each interval `(t_{n-1}, t_n]`.
    steps: Vec<(usize, f64)>,
}

impl Simulator<'_> {
    fn total_steps(&self) -> usize {
        self.steps.iter().map(|s| s.0).sum()
    }

    fn run(&self, shocks: &[f64], sign: f64) -> PathSample {
        let da = self.policy.guarantee_grid().spacing();
        let n_events = self.contract.num_events();
        let mut state = MCPathState::new(self.contract);
        let mut sample = PathSample::default();
        let mut k = 0;
        for n in 1..=n_events {
            let (count, dt) = self.steps[n - 1];
            for _ in 0..count {
                state.advance(dt, sign * shocks[k], self.market, self.fees);
                k += 1;
            }
            let pre = PolicyState {
                wealth: state.w,
                guarantee: state.a,
            };
            if n == n_events {
                sample.value += state.discount * self.behavior.liquidation_value(pre);
                sample.liability += state.discount * self.behavior.terminal_liability(pre);
                break;
            }
            let gamma = self.policy.lookup(n, state.w, state.a);
            sample.value += state.discount * self.behavior.cash_flow(n, gamma, pre);
            sample.liability += state.discount * self.behavior.insurer_payment(n, gamma, pre);
            state.w = (state.w - gamma).max(0.0);
            // Keep the guarantee exactly on the grid.
            let units = ((state.a - gamma) / da).round().max(0.0);
            state.a = units * da;
        }
        sample.liability -= state.fee_income_pv;
        sample
    }
}

fn check_inputs(policy: &PolicyTable, contract: &ContractSpec, settings: &MCSettings) -> Result<()> {
    contract.validate()?;
    let n_events = contract.num_events();
    if policy.num_decision_dates() != n_events - 1 {
        return Err(GmwbError::Config(format!(
            "policy has {} decision dates, contract has {}",
            policy.num_decision_dates(),
            n_events - 1
        )));
    }
    if n_events > 1 && policy.is_empty() {
        return Err(GmwbError::Config("policy table is empty".into()));
    }
    let levels = policy.guarantee_grid().levels();
    let top = *levels.last().expect("guarantee grid has levels");
    if (top - contract.initial_guarantee).abs() > 1e-12 {
        return Err(GmwbError::Config("policy guarantee grid does not end at A0".into()));
    }
    if policy.wealth_grid().node_index(contract.initial_wealth).is_none() {
        return Err(GmwbError::Config("W0 is not a node of the policy wealth grid".into()));
    }
    if settings.num_paths < 2 || (settings.antithetic && !settings.num_paths.is_multiple_of(2)) {
        return Err(GmwbError::Config(
            "num_paths must be at least 2, and even with antithetic pairs".into(),
        ));
    }
    if settings.sub_steps_per_year == 0 {
        return Err(GmwbError::Config("sub_steps_per_year must be positive".into()));
    }
    Ok(())
}

/// Estimates `V(0)`, `L(0)` and `M(0)` under a frozen policy.
///
/// Path `p` (or antithetic pair `p`) draws from its own ChaCha stream, so
/// results do not depend on the thread count.
pub fn simulate(
    policy: &PolicyTable,
    contract: &ContractSpec,
    market: &MarketParams,
    fees: &FeeSchedule,
    settings: &MCSettings,
) -> Result<MCValuation> {
    check_inputs(policy, contract, settings)?;
    let steps = (1..=contract.num_events())
        .map(|n| {
            let len = contract.event_time(n) - contract.event_time(n - 1);
            let count = ((len * settings.sub_steps_per_year as f64) - 1e-9).ceil().max(1.0) as usize;
            (count, len / count as f64)
        })
        .collect();
    let sim = Simulator {
        policy,
        contract,
        behavior: StandardGmwb::new(contract),
        market,
        fees,
        steps,
    };
    let total_steps = sim.total_steps();
    let samples_per_draw = if settings.antithetic { 2 } else { 1 };
    let draws = settings.num_paths / samples_per_draw;

    // One sample per draw: antithetic pairs are averaged before the variance.
    let samples: Vec<PathSample> = (0..draws)
        .into_par_iter()
        .map_init(
            || vec![0.0; total_steps],
            |shocks, d| {
                let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                rng.set_stream(d as u64);
                for z in shocks.iter_mut() {
                    *z = StandardNormal.sample(&mut rng);
                }
                let up = sim.run(shocks, 1.0);
                if settings.antithetic {
                    let down = sim.run(shocks, -1.0);
                    PathSample {
                        value: 0.5 * (up.value + down.value),
                        liability: 0.5 * (up.liability + down.liability),
                    }
                } else {
                    up
                }
            },
        )
        .collect();

    let w0 = contract.initial_wealth;
    let estimate = |f: &dyn Fn(&PathSample) -> f64| {
        let (mean, std_error) = mean_and_error(samples.iter().map(f), draws);
        MCEstimate {
            mean,
            std_error,
            num_paths: settings.num_paths,
        }
    };
    Ok(MCValuation {
        value: estimate(&|s| s.value),
        liability: estimate(&|s| s.liability),
        management_fees: estimate(&|s| s.liability + w0 - s.value),
    })
}

/// Mean and standard error with compensated summation, in input order.
fn mean_and_error(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = kahan_sum(xs.clone()) / n as f64;
    let ss = kahan_sum(xs.map(|x| (x - mean) * (x - mean)));
    let var = if n > 1 { ss / (n - 1) as f64 } else { 0.0 };
    (mean, (var / n as f64).sqrt())
}

fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0, 0.0);
    for x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{price, StrategyKind};
    use crate::grid::{GridConfig, GridPreset};
    use crate::model::build_contract;

    fn static_policy(contract: &ContractSpec, market: &MarketParams, fees: &FeeSchedule) -> (PolicyTable, f64) {
        let cfg = GridConfig {
            num_wealth_nodes: 121,
            nodes_per_contract_amount: 2,
            steps_per_year: 20,
            ..GridPreset::Fast.config()
        };
        let res = price(contract, market, fees, StrategyKind::StaticContractual, &cfg).unwrap();
        (res.policy, res.v0)
    }

    fn settings(num_paths: usize, seed: u64) -> MCSettings {
        MCSettings {
            num_paths,
            seed,
            ..MCSettings::default()
        }
    }

    #[test]
    fn degenerate_volatility_gives_deterministic_cash_flows() {
        let contract = build_contract(10.0, 1, 0.1, 1.0, 1.0).unwrap();
        let market = MarketParams::new(0.0, 1e-8).unwrap();
        let fees = FeeSchedule::zero();
        let (policy, _) = static_policy(&contract, &market, &fees);
        let out = simulate(&policy, &contract, &market, &fees, &settings(1000, 3)).unwrap();
        // Ten withdrawals of 0.1 from an account that never moves.
        assert!((out.value.mean - 1.0).abs() < 1e-6);
        assert!(out.value.std_error < 1e-6);
        assert!(out.liability.mean.abs() < 1e-6);
    }

    #[test]
    fn discounted_wealth_is_a_martingale() {
        let market = MarketParams::new(0.04, 0.3).unwrap();
        let fees = FeeSchedule::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let finals: Vec<f64> = (0..n)
            .map(|_| {
                let mut state = MCPathState {
                    s: 1.0,
                    w: 1.0,
                    a: 0.0,
                    discount: 1.0,
                    fee_income_pv: 0.0,
                };
                for _ in 0..10 {
                    state.advance(0.5, StandardNormal.sample(&mut rng), &market, &fees);
                }
                state.discount * state.w
            })
            .collect();
        let (mean, se) = mean_and_error(finals.iter().copied(), n);
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn zero_insurance_fee_collects_no_income() {
        let market = MarketParams::new(0.03, 0.2).unwrap();
        let fees = FeeSchedule::new(0.02, 0.0).unwrap();
        let mut state = MCPathState {
            s: 1.0,
            w: 1.0,
            a: 1.0,
            discount: 1.0,
            fee_income_pv: 0.0,
        };
        for z in [0.3, -1.2, 2.0, 0.0] {
            state.advance(0.25, z, &market, &fees);
            assert_eq!(state.fee_income_pv, 0.0);
        }
    }

    #[test]
    fn agrees_with_pde_and_scales_with_paths() {
        let contract = build_contract(5.0, 1, 0.1, 1.0, 1.0).unwrap();
        let market = MarketParams::new(0.05, 0.2).unwrap();
        let fees = FeeSchedule::new(0.01, 0.01).unwrap();
        let (policy, v0) = static_policy(&contract, &market, &fees);
        let small = simulate(&policy, &contract, &market, &fees, &settings(20_000, 5)).unwrap();
        let large = simulate(&policy, &contract, &market, &fees, &settings(40_000, 5)).unwrap();
        let ratio = small.value.std_error / large.value.std_error;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
        assert!(large.value.z_score(v0) < 3.0, "{:?} vs {v0}", large.value);
        assert!(large.management_fees.mean > -3.0 * large.management_fees.std_error);
    }

    #[test]
    fn same_seed_same_estimate() {
        let contract = build_contract(3.0, 1, 0.1, 1.0, 1.0).unwrap();
        let market = MarketParams::new(0.01, 0.3).unwrap();
        let fees = FeeSchedule::new(0.0, 0.02).unwrap();
        let (policy, _) = static_policy(&contract, &market, &fees);
        let a = simulate(&policy, &contract, &market, &fees, &settings(2_000, 9)).unwrap();
        let b = simulate(&policy, &contract, &market, &fees, &settings(2_000, 9)).unwrap();
        let c = simulate(&policy, &contract, &market, &fees, &settings(2_000, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.value.mean, c.value.mean);
    }

    #[test]
    fn rejects_mismatched_policy() {
        let contract = build_contract(3.0, 1, 0.1, 1.0, 1.0).unwrap();
        let other = build_contract(4.0, 1, 0.1, 1.0, 1.0).unwrap();
        let market = MarketParams::new(0.01, 0.3).unwrap();
        let fees = FeeSchedule::zero();
        let (policy, _) = static_policy(&other, &market, &fees);
        let err = simulate(&policy, &contract, &market, &fees, &settings(100, 1)).unwrap_err();
        assert!(matches!(err, GmwbError::Config(_)));
        let (policy, _) = static_policy(&contract, &market, &fees);
        assert!(simulate(&policy, &contract, &market, &fees, &settings(101, 1)).is_err());
    }
}
