//! Cash flows and account updates at event dates and maturity.

use crate::error::{GmwbError, Result};
use crate::model::{ContractSpec, PolicyState};

/// A nominal withdrawal amount taken at an event date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WithdrawalDecision {
    pub gamma: f64,
}

/// Cash flow received by the policyholder: the withdrawal less a penalty
/// on the part exceeding the contractual amount.
#[inline]
pub fn cash_flow(gamma: f64, contractual: f64, beta: f64) -> f64 {
    gamma - beta * (gamma - contractual).max(0.0)
}

/// Amount paid by the insurer: the cash flow not funded from the wealth
/// account. Negative when penalties exceed the shortfall.
#[inline]
pub fn insurer_payment(gamma: f64, wealth_pre: f64, contractual: f64, beta: f64) -> f64 {
    cash_flow(gamma, contractual, beta) - wealth_pre.min(gamma)
}

/// Post-withdrawal balances: `A - gamma` and `max(W - gamma, 0)`.
pub fn apply_withdrawal(state: PolicyState, gamma: f64) -> Result<PolicyState> {
    if !(gamma >= 0.0) || gamma > state.guarantee {
        return Err(GmwbError::Admissibility {
            gamma,
            available: state.guarantee,
        });
    }
    Ok(PolicyState {
        wealth: (state.wealth - gamma).max(0.0),
        guarantee: state.guarantee - gamma,
    })
}

/// Liquidation cash flow at maturity: the remaining guarantee is withdrawn
/// (penalized above `G_N`) and any wealth left after that is paid out.
#[inline]
pub fn terminal_value(state: PolicyState, contractual: f64, beta: f64) -> f64 {
    let a = state.guarantee;
    cash_flow(a, contractual, beta) + (state.wealth - a).max(0.0)
}

/// Insurer's terminal liability: the part of the liquidation value not
/// covered by the wealth account.
#[inline]
pub fn terminal_liability(state: PolicyState, contractual: f64, beta: f64) -> f64 {
    terminal_value(state, contractual, beta) - state.wealth
}

/// Contract-specific cash flows, guarantee updates and liquidation value.
///
/// Event indices are 1-based; `N` is maturity.
pub trait ContractBehavior: Sync {
    fn num_events(&self) -> usize;

    /// `C_n(gamma, X(t_n^-))`.
    fn cash_flow(&self, n: usize, gamma: f64, pre: PolicyState) -> f64;

    /// `D_n(gamma, X(t_n^-))`, the reduction of the guarantee account.
    fn guarantee_reduction(&self, _n: usize, gamma: f64, _pre: PolicyState) -> f64 {
        gamma
    }

    /// `V(T^-, X(T^-))`.
    fn liquidation_value(&self, pre: PolicyState) -> f64;

    /// `c_n`: the insurer-funded part of the cash flow.
    fn insurer_payment(&self, n: usize, gamma: f64, pre: PolicyState) -> f64 {
        self.cash_flow(n, gamma, pre) - pre.wealth.min(gamma)
    }

    /// `L(T^-, X(T^-)) = V(T^-, X(T^-)) - W(T^-)`.
    fn terminal_liability(&self, pre: PolicyState) -> f64 {
        self.liquidation_value(pre) - pre.wealth
    }
}

/// The standard rider: proportional penalty above `G_n`, guarantee reduced
/// by the nominal withdrawal, forced liquidation at maturity.
#[derive(Debug, Clone)]
pub struct StandardGmwb {
    contractual_amounts: Vec<f64>,
    beta: f64,
}

impl StandardGmwb {
    pub fn new(spec: &ContractSpec) -> Self {
        Self {
            contractual_amounts: spec.contractual_amounts.clone(),
            beta: spec.penalty_beta,
        }
    }
}

impl ContractBehavior for StandardGmwb {
    fn num_events(&self) -> usize {
        self.contractual_amounts.len()
    }

    #[inline]
    fn cash_flow(&self, n: usize, gamma: f64, _pre: PolicyState) -> f64 {
        cash_flow(gamma, self.contractual_amounts[n - 1], self.beta)
    }

    fn liquidation_value(&self, pre: PolicyState) -> f64 {
        terminal_value(pre, self.contractual_amounts[self.num_events() - 1], self.beta)
    }
}
