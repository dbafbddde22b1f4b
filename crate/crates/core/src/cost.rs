//! Per-block stage cost, its analytic upper bound, and delay compensation.

use crate::error::{ensure, Error, Result};
use crate::process::DemandModel;

/// Delay penalty `a` (ETH per waiting tx per block), posting cost
/// `(b0 + b1 * s) * price` with `b0`, `b1` in gas units, discount `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostParams {
    pub a: f64,
    pub b0: f64,
    pub b1: f64,
    pub gamma: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { a: 5e-5, b0: 1000.0, b1: 500.0, gamma: 0.95 }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.a >= 0.0, || format!("a={} < 0", self.a))?;
        ensure(self.b0 >= 0.0 && self.b1 >= 0.0, || format!("b0={} b1={} must be >= 0", self.b0, self.b1))?;
        ensure(self.gamma > 0.0 && self.gamma < 1.0, || format!("gamma={} not in (0,1)", self.gamma))
    }

    #[inline]
    pub fn posting(&self, s: u64, p: f64) -> f64 {
        if s == 0 {
            0.0
        } else {
            (self.b0 + self.b1 * s as f64) * p
        }
    }

    /// Stage cost without argument checks.
    #[inline]
    pub fn stage(&self, q: u64, s: u64, p: f64) -> f64 {
        self.a * (q - s) as f64 + self.posting(s, p)
    }
}

pub fn stage_cost(q: u64, s: u64, p: f64, params: &CostParams) -> Result<f64> {
    if s > q {
        return Err(Error::InvalidParam(format!("cannot post {s} of {q} queued")));
    }
    ensure(p > 0.0, || format!("price {p} must be positive"))?;
    Ok(params.stage(q, s, p))
}

/// `(b0 + b1 * lambda(f)) * mu`: expected cost if every block posted.
pub fn cost_upper_bound(f: f64, params: &CostParams, demand: &DemandModel, mu: f64) -> Result<f64> {
    ensure((0.0..=demand.choke_fee()).contains(&f), || {
        format!("fee {f} outside [0, {}]", demand.choke_fee())
    })?;
    Ok((params.b0 + params.b1 * demand.lambda0 - params.b1 * demand.k * f) * mu)
}

pub fn compensation_owed(total_delay_blocks: u64, params: &CostParams) -> f64 {
    params.a * total_delay_blocks as f64
}
