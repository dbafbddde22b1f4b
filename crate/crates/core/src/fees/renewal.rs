use crate::error::{Error, Result};
use crate::process::RngStream;
use crate::sim::{PolicyCache, World};

use super::estimate::mean_and_se;
use super::expected_pnl;

const MIN_PERIODS: usize = 100;
const EPSILON: f64 = 1e-12;

/// Mean and batch-means standard error over 100 consecutive batches, which
/// stays honest when successive periods are correlated through the price.
fn batch_means(xs: &[f64]) -> (f64, f64) {
    let len = xs.len() / 100;
    let means: Vec<f64> = xs.chunks_exact(len).take(100).map(|c| c.iter().sum::<f64>() / len as f64).collect();
    let (_, se) = mean_and_se(&means);
    (xs.iter().sum::<f64>() / xs.len() as f64, se)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenewalCheck {
    /// Mean X per posting period.
    pub lhs: f64,
    pub lhs_se: f64,
    /// Mean period length times mean per-block pnl.
    pub rhs: f64,
    pub rhs_se: f64,
    pub rel_gap: f64,
    pub periods: usize,
    pub mean_tau: f64,
}

/// Compares the per-period pnl with mean period length times per-block pnl.
///
/// Periods come from one trajectory on `stream`; the per-block pnl is
/// estimated on an independent child stream so the two sides do not share
/// noise.
pub fn renewal_check(fee: f64, cache: &PolicyCache, n_blocks: usize, stream: RngStream) -> Result<RenewalCheck> {
    let solution = cache.get(fee)?;
    let grid = cache.grid();
    let mut world = World::new(cache.model(), stream);
    for _ in 0..n_blocks / 10 {
        world.step(fee, &solution, grid);
    }
    // align to a period boundary
    let mut guard = 0;
    while world.queue() > 0 && guard < n_blocks {
        world.step(fee, &solution, grid);
        guard += 1;
    }
    let (mut xs, mut taus) = (Vec::new(), Vec::new());
    let (mut x, mut tau) = (0.0, 0u64);
    for _ in 0..n_blocks {
        let out = world.step(fee, &solution, grid);
        x += out.arrivals as f64 * fee - out.cost;
        tau += 1;
        if out.posted > 0 {
            xs.push(x);
            taus.push(tau as f64);
            x = 0.0;
            tau = 0;
        }
    }
    if xs.len() < MIN_PERIODS {
        return Err(Error::TooFewPeriods { observed: xs.len(), required: MIN_PERIODS });
    }
    let (lhs, lhs_se) = batch_means(&xs);
    let (mean_tau, tau_se) = batch_means(&taus);
    let block = expected_pnl(fee, cache, n_blocks, stream.child(1))?;
    let rhs = mean_tau * block.pnl;
    let rhs_se = ((mean_tau * block.std_err).powi(2) + (block.pnl * tau_se).powi(2)).sqrt();
    Ok(RenewalCheck {
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        rel_gap: (lhs - rhs).abs() / (rhs.abs() + EPSILON),
        periods: xs.len(),
        mean_tau,
    })
}
