use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fees::{stationary_split, SwitchMatrix};
use crate::process::RngStream;

use super::{run_posting_period, PolicyCache, World};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchEstimate {
    pub matrix: SwitchMatrix,
    pub p01_se: f64,
    pub p10_se: f64,
    pub n_batches: usize,
}

/// Fraction of kappa-period batches at a frozen fee whose sum (of X when
/// `use_x`, else of Y) is negative. A tenth as many batches are burned first.
#[allow(clippy::too_many_arguments)]
fn negative_batch_rate(
    cache: &PolicyCache,
    fee: f64,
    use_x: bool,
    n_batches: usize,
    kappa: usize,
    lambda_bar: f64,
    tau_max: u64,
    stream: RngStream,
) -> Result<f64> {
    let policy = cache.get(fee)?;
    let mut world = World::new(cache.model(), stream);
    let mut hits = 0usize;
    for b in 0..n_batches / 10 + n_batches {
        let mut sum = 0.0;
        for _ in 0..kappa {
            let s = run_posting_period(&mut world, fee, &policy, cache.grid(), lambda_bar, tau_max);
            sum += if use_x { s.x } else { s.y };
        }
        if b >= n_batches / 10 && sum < 0.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_batches as f64)
}

/// Regime switch probabilities with both fees frozen at their targets:
/// `p10 = P(Ysum < 0)` at `fee_f`, `p01 = P(Xsum < 0)` at `fee_p`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_switch_matrix(
    cache: &PolicyCache,
    fee_f: f64,
    fee_p: f64,
    n_batches: usize,
    kappa: usize,
    lambda_bar: f64,
    tau_max: u64,
    stream: RngStream,
) -> Result<SwitchEstimate> {
    let (p10, p01) = rayon::join(
        || negative_batch_rate(cache, fee_f, false, n_batches, kappa, lambda_bar, tau_max, stream.child(0)),
        || negative_batch_rate(cache, fee_p, true, n_batches, kappa, lambda_bar, tau_max, stream.child(1)),
    );
    let (p10, p01) = (p10?, p01?);
    let se = |p: f64| (p * (1.0 - p) / n_batches as f64).sqrt();
    Ok(SwitchEstimate {
        matrix: SwitchMatrix::from_switch_probs(p01, p10),
        p01_se: se(p01),
        p10_se: se(p10),
        n_batches,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaRow {
    pub kappa: usize,
    pub p01: f64,
    pub p10: f64,
    pub pi_f: f64,
    pub pi_p: f64,
    pub minority: f64,
}

/// Minority regime share for each batch size, at frozen target fees.
#[allow(clippy::too_many_arguments)]
pub fn kappa_sweep(
    cache: &PolicyCache,
    f_star: f64,
    p_star: f64,
    fee_tol: f64,
    kappas: &[usize],
    n_batches: usize,
    lambda_bar: f64,
    tau_max: u64,
    stream: RngStream,
) -> Result<Vec<KappaRow>> {
    if (f_star - p_star).abs() <= fee_tol {
        return Err(Error::NotSeparated { f_star, p_star, tol: fee_tol });
    }
    kappas
        .par_iter()
        .map(|&kappa| {
            let est =
                estimate_switch_matrix(cache, f_star, p_star, n_batches, kappa, lambda_bar, tau_max, stream.child(kappa as u64))?;
            let (pi_f, pi_p) = stationary_split(&est.matrix)?;
            Ok(KappaRow { kappa, p01: est.matrix.p01, p10: est.matrix.p10, pi_f, pi_p, minority: pi_f.min(pi_p) })
        })
        .collect()
}
