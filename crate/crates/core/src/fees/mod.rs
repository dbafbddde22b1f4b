//! Target fees: closed-form congestion fee, Monte-Carlo budget-balance fee,
//! and the diagnostics around them.

mod estimate;
mod renewal;

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::process::DemandModel;

pub use estimate::{
    estimate_expected_cost, expected_pnl, find_budget_balance_fee, pnl_curve, BudgetBalance, CostEstimate, McConfig,
    PnlEstimate,
};
pub use renewal::{renewal_check, RenewalCheck};

/// Admissible fee interval `[0, lambda0 / (2k)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeeBounds {
    pub lo: f64,
    pub hi: f64,
}

impl FeeBounds {
    pub fn for_demand(demand: &DemandModel) -> Self {
        Self { lo: 0.0, hi: demand.lambda0 / (2.0 * demand.k) }
    }

    pub fn contains(&self, fee: f64) -> bool {
        (self.lo..=self.hi).contains(&fee)
    }
}

pub const CONGESTION_CONDITION: &str = "congestion target condition lambda0/2 <= lambda_bar <= lambda0";
pub const EXISTENCE_CONDITION: &str = "budget-balance existence condition lambda0^2/(4k) >= (b0 + b1*lambda0)*mu";

/// `(lambda0 - lambda_bar) / k`, the fee whose expected arrivals hit the target.
pub fn congestion_fee_closed_form(demand: &DemandModel, lambda_bar: f64) -> Result<f64> {
    let lo = demand.lambda0 / 2.0;
    if lambda_bar < lo {
        return Err(Error::ConditionViolated { condition: CONGESTION_CONDITION, margin: lambda_bar - lo });
    }
    if lambda_bar > demand.lambda0 {
        return Err(Error::ConditionViolated { condition: CONGESTION_CONDITION, margin: demand.lambda0 - lambda_bar });
    }
    Ok((demand.lambda0 - lambda_bar) / demand.k)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Existence {
    pub holds: bool,
    pub margin: f64,
}

/// Peak revenue `lambda0^2 / 4k` against the every-block cost bound at fee 0.
pub fn check_existence_condition(demand: &DemandModel, cost: &CostParams, mu: f64) -> Existence {
    let margin = demand.lambda0 * demand.lambda0 / (4.0 * demand.k) - (cost.b0 + cost.b1 * demand.lambda0) * mu;
    Existence { holds: margin >= 0.0, margin }
}

/// Regime-flag transition probabilities at frozen target fees. Index 1 is
/// the budget regime, 0 congestion; `p10` is budget -> congestion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchMatrix {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl SwitchMatrix {
    pub fn from_switch_probs(p01: f64, p10: f64) -> Self {
        Self { p00: 1.0 - p01, p01, p10, p11: 1.0 - p10 }
    }
}

/// Stationary law `(pi_f, pi_p)` of the two-state regime chain:
/// `pi_f = p01 / (p01 + p10)`.
pub fn stationary_split(m: &SwitchMatrix) -> Result<(f64, f64)> {
    let total = m.p01 + m.p10;
    if total <= 0.0 {
        return Err(Error::DegenerateSwitch);
    }
    let pi_f = m.p01 / total;
    Ok((pi_f, 1.0 - pi_f))
}
