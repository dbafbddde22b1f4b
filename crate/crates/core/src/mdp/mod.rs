//! Discretized posting MDP over (queue, price), solved by policy iteration
//! over the binary action set {hold, post all}.

mod grid;
mod oracle;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

pub use grid::{build_price_grid, PriceGrid};
pub use oracle::bellman_backup_full;
pub use solver::{solve, solve_from};

/// How next-queue lengths above `q_max` are valued.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// An overflowing queue must be posted in full: value `(b0 + b1 q') p + J(0, p)`.
    ForcedPost,
    /// Overflow arrivals are dropped into the `q_max` state.
    Lump,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MdpConfig {
    pub q_max: usize,
    pub n_price: usize,
    pub grid_width_sds: f64,
    /// Policy-evaluation stopping tolerance on the sup-norm change, in ETH.
    pub tol: f64,
    /// Cap on policy-improvement rounds.
    pub max_iters: usize,
    pub boundary: Boundary,
}

impl Default for MdpConfig {
    fn default() -> Self {
        Self {
            q_max: 200,
            n_price: 101,
            grid_width_sds: 4.0,
            tol: 1e-14,
            max_iters: 100,
            boundary: Boundary::ForcedPost,
        }
    }
}

impl MdpConfig {
    /// The 31 x 21 instance used for exhaustive checks.
    pub fn small() -> Self {
        Self { q_max: 30, n_price: 21, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.q_max >= 1, || "q_max must be >= 1".into())?;
        ensure(self.n_price >= 3, || "n_price must be >= 3".into())?;
        ensure(self.grid_width_sds > 0.0, || "grid_width_sds must be > 0".into())?;
        ensure(self.tol > 0.0, || "tol must be > 0".into())?;
        ensure(self.max_iters >= 1, || "max_iters must be >= 1".into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Hold,
    PostAll,
}

impl Action {
    pub fn code(self) -> u8 {
        match self {
            Action::Hold => 0,
            Action::PostAll => 1,
        }
    }
}

/// Value table, policy and per-price thresholds at one fee.
///
/// Tables are stored queue-major: entry `(q, i)` sits at `q * n_price + i`.
#[derive(Clone, Debug)]
pub struct MdpSolution {
    pub fee: f64,
    pub q_max: usize,
    pub n_price: usize,
    pub boundary: Boundary,
    pub(crate) value: Vec<f64>,
    pub(crate) policy: Vec<Action>,
    /// Largest holding queue per price column.
    pub(crate) thresholds: Vec<usize>,
    /// Max Bellman residual of the returned value table.
    pub residual: f64,
    pub rounds: usize,
    pub sweeps: usize,
}

impl MdpSolution {
    #[inline]
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.value[q * self.n_price + i]
    }

    #[inline]
    pub fn action(&self, q: usize, i: usize) -> Action {
        self.policy[q * self.n_price + i]
    }

    pub fn column(&self, i: usize) -> Vec<Action> {
        (0..=self.q_max).map(|q| self.action(q, i)).collect()
    }

    /// Largest hold queue per price index, without shape validation.
    /// See [`extract_thresholds`] for the validated version.
    pub fn thresholds(&self) -> &[usize] {
        &self.thresholds
    }

    /// Threshold rule: post iff the queue exceeds the column's threshold.
    #[inline]
    pub fn posts(&self, q: u64, i: usize) -> bool {
        q > self.thresholds[i] as u64
    }
}

/// Threshold of one column: the largest holding queue, after checking the
/// column switches at most once, from hold to post.
pub fn column_threshold(column: &[Action]) -> std::result::Result<usize, usize> {
    let mut last_hold = 0;
    let mut posted = false;
    for (q, &a) in column.iter().enumerate() {
        match a {
            Action::PostAll => posted = true,
            Action::Hold if posted => return Err(q),
            Action::Hold => last_hold = q,
        }
    }
    Ok(last_hold)
}

pub fn extract_thresholds(solution: &MdpSolution) -> Result<Vec<usize>> {
    (0..solution.n_price)
        .map(|i| {
            column_threshold(&solution.column(i))
                .map_err(|q| Error::ThresholdViolation { column: i, q })
        })
        .collect()
}
