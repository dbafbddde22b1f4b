//! Online fee machinery: per-period accumulators, projected stochastic
//! approximation updates for the two target fees, and regime selection.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::fees::FeeBounds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Constant,
    Decreasing,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSchedule {
    pub kind: StepKind,
    pub base: f64,
}

impl StepSchedule {
    pub fn new(kind: StepKind, base: f64) -> Result<Self> {
        ensure(base > 0.0, || format!("step base {base} must be > 0"))?;
        Ok(Self { kind, base })
    }
}

/// Step at the `n`-th update (from 0) of the schedule's regime.
pub fn step_size(schedule: &StepSchedule, n: u64) -> f64 {
    match schedule.kind {
        StepKind::Constant => schedule.base,
        StepKind::Decreasing => schedule.base / (n + 1) as f64,
    }
}

/// Accumulators over one posting period.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PeriodStats {
    /// Revenue minus cost (ETH).
    pub x: f64,
    /// Target minus actual arrivals (tx).
    pub y: f64,
    pub tau: u64,
    /// Transaction-blocks spent waiting.
    pub delay_blocks: u64,
    pub arrivals: u64,
    pub posted: u64,
    pub cost: f64,
    /// Closed at the block cap without a post.
    pub forced_close: bool,
}

impl PeriodStats {
    #[inline]
    pub fn add_block(&mut self, arrivals: u64, fee: f64, block_cost: f64, lambda_bar: f64, queue_after: u64) {
        self.x += arrivals as f64 * fee - block_cost;
        self.y += lambda_bar - arrivals as f64;
        self.tau += 1;
        self.delay_blocks += queue_after;
        self.arrivals += arrivals;
        self.cost += block_cost;
    }
}

pub fn accumulate_block(
    mut stats: PeriodStats,
    arrivals: u64,
    fee: f64,
    block_cost: f64,
    lambda_bar: f64,
    queue_after: u64,
) -> PeriodStats {
    stats.add_block(arrivals, fee, block_cost, lambda_bar, queue_after);
    stats
}

pub fn project(x: f64, bounds: &FeeBounds) -> f64 {
    bounds.hi.min(bounds.lo.max(x))
}

/// Which update rule produced the active fee.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    Budget,
    Congestion,
}

impl Regime {
    /// 1 for budget balance, 0 for congestion control.
    pub fn flag(self) -> u8 {
        match self {
            Regime::Budget => 1,
            Regime::Congestion => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerMode {
    /// Switch between the two rules on the sign of the batch sums.
    Adaptive,
    CongestionOnly,
    BudgetOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerState {
    pub g: f64,
    pub delta: Regime,
    pub f_last: f64,
    pub p_last: f64,
    pub x_last: f64,
    pub y_last: f64,
    pub i: u64,
    pub j: u64,
    pub kappa: usize,
    pub bounds: FeeBounds,
    pub step_f: StepSchedule,
    pub step_p: StepSchedule,
    pub mode: ControllerMode,
}

/// Outcome of one regime decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub delta_next: Regime,
    pub fee_next: f64,
    /// Mean per-posting X and Y of the batch.
    pub x_obs: f64,
    pub y_obs: f64,
}

impl ControllerState {
    /// Starts at the interval midpoint in the budget regime (congestion
    /// regime for a congestion-only controller) with zero last observations.
    pub fn new(bounds: FeeBounds, kappa: usize, step_f: StepSchedule, step_p: StepSchedule, mode: ControllerMode) -> Result<Self> {
        ensure(kappa >= 1, || "kappa must be >= 1".into())?;
        let g0 = 0.5 * (bounds.lo + bounds.hi);
        let delta = if mode == ControllerMode::CongestionOnly { Regime::Congestion } else { Regime::Budget };
        Ok(Self {
            g: g0,
            delta,
            f_last: g0,
            p_last: g0,
            x_last: 0.0,
            y_last: 0.0,
            i: 0,
            j: 0,
            kappa,
            bounds,
            step_f,
            step_p,
            mode,
        })
    }

    pub fn decisions(&self) -> u64 {
        self.i + self.j
    }
}

pub fn update_budget_fee(state: &mut ControllerState, x_obs: f64) -> f64 {
    let f = project(state.f_last - step_size(&state.step_f, state.i) * x_obs, &state.bounds);
    state.i += 1;
    state.f_last = f;
    state.g = f;
    f
}

pub fn update_congestion_fee(state: &mut ControllerState, y_obs: f64) -> f64 {
    let p = project(state.p_last - step_size(&state.step_p, state.j) * y_obs, &state.bounds);
    state.j += 1;
    state.p_last = p;
    state.g = p;
    p
}

/// Records a batch of `kappa` periods observed at the active fee, picks the
/// next regime and moves the fee.
pub fn select_next(state: &mut ControllerState, batch: &[PeriodStats]) -> Result<Decision> {
    if batch.len() != state.kappa {
        return Err(Error::BatchSize { got: batch.len(), kappa: state.kappa });
    }
    let x_sum: f64 = batch.iter().map(|s| s.x).sum();
    let y_sum: f64 = batch.iter().map(|s| s.y).sum();
    let k = state.kappa as f64;
    let (x_obs, y_obs) = (x_sum / k, y_sum / k);
    match state.delta {
        Regime::Budget => {
            state.f_last = state.g;
            state.x_last = x_obs;
        }
        Regime::Congestion => {
            state.p_last = state.g;
            state.y_last = y_obs;
        }
    }
    let next = match (state.mode, state.delta) {
        (ControllerMode::CongestionOnly, _) => Regime::Congestion,
        (ControllerMode::BudgetOnly, _) => Regime::Budget,
        (ControllerMode::Adaptive, Regime::Budget) if y_sum < 0.0 => Regime::Congestion,
        (ControllerMode::Adaptive, Regime::Congestion) if x_sum < 0.0 => Regime::Budget,
        (ControllerMode::Adaptive, current) => current,
    };
    state.delta = next;
    let fee_next = match next {
        Regime::Budget => update_budget_fee(state, state.x_last),
        Regime::Congestion => update_congestion_fee(state, state.y_last),
    };
    Ok(Decision { delta_next: next, fee_next, x_obs, y_obs })
}
