//! Contract, market and fee parameters.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Constant risk-free rate and index volatility, both per annum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub r: f64,
    pub sigma: f64,
}

impl MarketParams {
    pub fn new(r: f64, sigma: f64) -> Result<Self> {
        if !r.is_finite() {
            return invalid("r", "must be finite");
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return invalid("sigma", format!("must be positive, got {sigma}"));
        }
        Ok(Self { r, sigma })
    }
}

/// Constant proportional fee rates charged continuously on the wealth account.
///
/// The management fee goes to an external fund manager; only the insurance
/// fee funds the guarantee. The insurance fee may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeSchedule {
    alpha_m: f64,
    alpha_ins: f64,
}

impl FeeSchedule {
    pub fn new(alpha_m: f64, alpha_ins: f64) -> Result<Self> {
        if !(alpha_m.is_finite() && alpha_m >= 0.0) {
            return invalid("alpha_m", format!("must be finite and >= 0, got {alpha_m}"));
        }
        if !alpha_ins.is_finite() {
            return invalid("alpha_ins", "must be finite");
        }
        Ok(Self { alpha_m, alpha_ins })
    }

    /// Fee-free schedule.
    pub fn zero() -> Self {
        Self {
            alpha_m: 0.0,
            alpha_ins: 0.0,
        }
    }

    pub fn alpha_m(&self) -> f64 {
        self.alpha_m
    }

    pub fn alpha_ins(&self) -> f64 {
        self.alpha_ins
    }

    pub fn alpha_tot(&self) -> f64 {
        total_fee(self)
    }

    /// Same management fee, different insurance fee.
    pub fn with_insurance_fee(&self, alpha_ins: f64) -> Result<Self> {
        Self::new(self.alpha_m, alpha_ins)
    }
}

pub fn total_fee(fees: &FeeSchedule) -> f64 {
    fees.alpha_m + fees.alpha_ins
}

/// Terms of a GMWB rider.
///
/// Event times are `t_1 < ... < t_N = T`; there is no withdrawal at `t_0 = 0`.
/// The withdrawal at `t_N` is the forced liquidation of the remaining
/// guarantee balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub maturity: f64,
    pub event_times: Vec<f64>,
    pub contractual_amounts: Vec<f64>,
    pub penalty_beta: f64,
    pub initial_wealth: f64,
    pub initial_guarantee: f64,
}

impl ContractSpec {
    pub fn num_events(&self) -> usize {
        self.event_times.len()
    }

    /// Contractual amount `G_n` for the 1-based event index `n`.
    pub fn contractual_amount(&self, n: usize) -> f64 {
        self.contractual_amounts[n - 1]
    }

    /// Event time `t_n`, with `t_0 = 0`.
    pub fn event_time(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.event_times[n - 1]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return invalid("maturity", format!("must be positive, got {}", self.maturity));
        }
        if self.event_times.is_empty() {
            return invalid("event_times", "at least one event date is required");
        }
        if self.event_times.len() != self.contractual_amounts.len() {
            return invalid(
                "contractual_amounts",
                "must have one amount per event date",
            );
        }
        let mut prev = 0.0;
        for &t in &self.event_times {
            if !(t > prev) {
                return invalid("event_times", "must be strictly increasing and positive");
            }
            prev = t;
        }
        if prev != self.maturity {
            return invalid("event_times", "last event must coincide with maturity");
        }
        if self.contractual_amounts.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return invalid("contractual_amounts", "must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.penalty_beta) {
            return invalid("penalty_beta", format!("must lie in [0, 1], got {}", self.penalty_beta));
        }
        if !(self.initial_wealth.is_finite() && self.initial_wealth > 0.0) {
            return invalid("initial_wealth", "must be positive");
        }
        if !(self.initial_guarantee.is_finite() && self.initial_guarantee > 0.0) {
            return invalid("initial_guarantee", "must be positive");
        }
        Ok(())
    }
}

/// Builds a contract with evenly spaced events and equal contractual
/// amounts that return the initial guarantee over the life of the contract.
pub fn build_contract(
    maturity: f64,
    events_per_year: u32,
    beta: f64,
    initial_wealth: f64,
    initial_guarantee: f64,
) -> Result<ContractSpec> {
    if !(maturity.is_finite() && maturity > 0.0) {
        return invalid("maturity", format!("must be positive, got {maturity}"));
    }
    if events_per_year == 0 {
        return invalid("events_per_year", "must be at least 1");
    }
    if !(initial_wealth.is_finite() && initial_wealth > 0.0) {
        return invalid("initial_wealth", format!("must be positive, got {initial_wealth}"));
    }
    if !(initial_guarantee.is_finite() && initial_guarantee > 0.0) {
        return invalid(
            "initial_guarantee",
            format!("must be positive, got {initial_guarantee}"),
        );
    }
    let periods = maturity * f64::from(events_per_year);
    let num_events = periods.round();
    if (periods - num_events).abs() > 1e-9 || num_events < 1.0 {
        return invalid(
            "maturity",
            "maturity times events_per_year must be a positive integer",
        );
    }
    let num_events = num_events as usize;
    let event_times: Vec<f64> = (1..=num_events)
        .map(|n| n as f64 / f64::from(events_per_year))
        .collect();
    let amount = initial_guarantee / num_events as f64;
    let spec = ContractSpec {
        maturity: event_times[num_events - 1],
        event_times,
        contractual_amounts: vec![amount; num_events],
        penalty_beta: beta,
        initial_wealth,
        initial_guarantee,
    };
    spec.validate()?;
    Ok(spec)
}

/// Wealth and guarantee balances of a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyState {
    pub wealth: f64,
    pub guarantee: f64,
}

impl PolicyState {
    pub fn new(wealth: f64, guarantee: f64) -> Result<Self> {
        if !(wealth.is_finite() && wealth >= 0.0) {
            return invalid("wealth", "must be finite and >= 0");
        }
        if !(guarantee.is_finite() && guarantee >= 0.0) {
            return invalid("guarantee", "must be finite and >= 0");
        }
        Ok(Self { wealth, guarantee })
    }
}
