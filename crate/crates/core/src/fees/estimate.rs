use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::mdp::{MdpSolution, PriceGrid};
use crate::process::RngStream;
use crate::sim::{Model, PolicyCache, World};

use super::{check_existence_condition, FeeBounds, EXISTENCE_CONDITION};

const BATCHES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    /// Blocks per probe, after a burn-in of a tenth as many.
    pub n_blocks: usize,
    pub stream: RngStream,
    pub fee_tol: f64,
}

impl McConfig {
    pub fn new(n_blocks: usize, stream: RngStream) -> Self {
        Self { n_blocks, stream, fee_tol: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostEstimate {
    pub mean: f64,
    /// Batch-means standard error.
    pub std_err: f64,
    pub blocks: usize,
    pub posts: u64,
    pub mean_queue: f64,
}

/// Time-average stage cost of the closed loop at a fixed fee and policy.
pub fn estimate_expected_cost(
    fee: f64,
    solution: &MdpSolution,
    grid: &PriceGrid,
    model: &Model,
    n_blocks: usize,
    stream: RngStream,
) -> Result<CostEstimate> {
    ensure(n_blocks >= 10_000, || format!("n_blocks={n_blocks} below 10^4"))?;
    let mut world = World::new(model, stream);
    let burn = n_blocks / 10;
    let mut last_post = 0;
    for t in 0..burn {
        if world.step(fee, solution, grid).posted > 0 {
            last_post = t;
        }
    }
    if world.queue() > 0 && last_post < burn / 2 {
        return Err(Error::Diverging { fee, queue: world.queue() });
    }
    let len = n_blocks / BATCHES;
    let mut means = Vec::with_capacity(BATCHES);
    let (mut posts, mut queue_sum) = (0, 0.0);
    for _ in 0..BATCHES {
        let mut acc = 0.0;
        for _ in 0..len {
            let out = world.step(fee, solution, grid);
            acc += out.cost;
            posts += (out.posted > 0) as u64;
            queue_sum += out.queue_after as f64;
        }
        means.push(acc / len as f64);
    }
    let (mean, std_err) = mean_and_se(&means);
    Ok(CostEstimate { mean, std_err, blocks: len * BATCHES, posts, mean_queue: queue_sum / (len * BATCHES) as f64 })
}

pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnlEstimate {
    pub fee: f64,
    pub revenue: f64,
    pub expected_cost: f64,
    pub pnl: f64,
    pub std_err: f64,
}

pub fn expected_pnl(fee: f64, cache: &PolicyCache, n_blocks: usize, stream: RngStream) -> Result<PnlEstimate> {
    let model = cache.model();
    let solution = cache.get(fee)?;
    let est = estimate_expected_cost(fee, &solution, cache.grid(), model, n_blocks, stream)?;
    let d = model.demand;
    let revenue = if fee <= d.choke_fee() { (d.lambda0 - d.k * fee) * fee } else { 0.0 };
    Ok(PnlEstimate { fee, revenue, expected_cost: est.mean, pnl: revenue - est.mean, std_err: est.std_err })
}

/// Pnl at each fee on one shared stream (common random numbers).
pub fn pnl_curve(fees: &[f64], cache: &PolicyCache, n_blocks: usize, stream: RngStream) -> Result<Vec<PnlEstimate>> {
    fees.par_iter().map(|&f| expected_pnl(f, cache, n_blocks, stream)).collect()
}

#[derive(Clone, Debug)]
pub struct BudgetBalance {
    pub fee: f64,
    /// Estimate at the returned fee.
    pub estimate: PnlEstimate,
    /// Every probe in evaluation order.
    pub probes: Vec<PnlEstimate>,
}

/// Bisection for the fee where expected pnl crosses zero.
pub fn find_budget_balance_fee(cache: &PolicyCache, mc: &McConfig) -> Result<BudgetBalance> {
    let model = cache.model();
    let ex = check_existence_condition(&model.demand, &model.cost, model.price.mu);
    if !ex.holds {
        return Err(Error::ConditionViolated { condition: EXISTENCE_CONDITION, margin: ex.margin });
    }
    let bounds = FeeBounds::for_demand(&model.demand);
    let mut probes = Vec::new();
    let mut probe = |fee: f64| -> Result<PnlEstimate> {
        let e = expected_pnl(fee, cache, mc.n_blocks, mc.stream)?;
        probes.push(e);
        Ok(e)
    };
    let top = probe(bounds.hi)?;
    if top.pnl < -3.0 * top.std_err {
        return Err(Error::NoSignChange { fee: bounds.hi, pnl: top.pnl, std_err: top.std_err });
    }
    let (mut lo, mut hi) = (bounds.lo, bounds.hi);
    let estimate = loop {
        let mid = 0.5 * (lo + hi);
        let e = probe(mid)?;
        if e.pnl.abs() <= e.std_err || hi - lo <= mc.fee_tol {
            break e;
        }
        if e.pnl < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    };
    Ok(BudgetBalance { fee: estimate.fee, estimate, probes })
}
