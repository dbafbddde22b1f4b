use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::process::{poisson_pmf, DemandModel};

use super::{Action, Boundary, MdpConfig, MdpSolution, PriceGrid};

const MAX_SWEEPS: usize = 1_000_000;

/// Arrival distribution pieces used by the backup: the pmf, plus tail mass
/// `P(A >= r)` and tail mean `E[A; A >= r]` for `r` in `0..=q_max + 1`.
struct Kernel {
    pmf: Vec<f64>,
    tail: Vec<f64>,
    tail_mean: Vec<f64>,
}

impl Kernel {
    fn new(rate: f64, q_max: usize) -> Self {
        let pmf = poisson_pmf(rate, q_max + 2);
        let len = pmf.len();
        let mut tail = vec![0.0; len + 1];
        let mut tail_mean = vec![0.0; len + 1];
        for r in (0..len).rev() {
            tail[r] = tail[r + 1] + pmf[r];
            tail_mean[r] = tail_mean[r + 1] + r as f64 * pmf[r];
        }
        tail.truncate(q_max + 2);
        tail_mean.truncate(q_max + 2);
        Self { pmf, tail, tail_mean }
    }
}

/// One solve's fixed data.
///
/// During policy evaluation only rows up to `hmax` (the largest holding
/// queue in any column) are stored explicitly. Every row above is "post" in
/// all columns, so its value is `(b0 + b1 q) p_j + J(0, j)` and its expected
/// next value is linear in `q`; those contributions collapse onto the tail
/// sums of the arrival kernel.
struct Ctx<'a> {
    grid: &'a PriceGrid,
    cost: CostParams,
    q_max: usize,
    n: usize,
    boundary: Boundary,
    kernel: Kernel,
    /// `E[P' | i]`
    ep: Vec<f64>,
}

impl Ctx<'_> {
    fn expectations(&self, value: &[f64], hmax: usize, w: &mut Vec<f64>) {
        let n = self.n;
        w.resize((hmax + 1) * n, 0.0);
        for q in 0..=hmax {
            self.grid.expect(&value[q * n..(q + 1) * n], &mut w[q * n..(q + 1) * n]);
        }
    }

    /// `E[J(q + A, P') | price i]` with overflow handled per the boundary rule.
    #[inline]
    fn cont(&self, q: usize, i: usize, w: &[f64], hmax: usize) -> f64 {
        let n = self.n;
        let k = &self.kernel;
        let mut acc = 0.0;
        let r0 = if q <= hmax {
            for a in 0..=hmax - q {
                acc += k.pmf[a] * w[(q + a) * n + i];
            }
            hmax - q + 1
        } else {
            0
        };
        let ep = self.ep[i];
        let e0 = w[i];
        let base = (self.cost.b0 + self.cost.b1 * q as f64) * ep + e0;
        let slope = self.cost.b1 * ep;
        match self.boundary {
            Boundary::ForcedPost => acc + base * k.tail[r0] + slope * k.tail_mean[r0],
            Boundary::Lump => {
                let r1 = self.q_max - q + 1;
                if r0 < r1 {
                    acc += base * (k.tail[r0] - k.tail[r1]) + slope * (k.tail_mean[r0] - k.tail_mean[r1]);
                }
                let top = if self.q_max <= hmax {
                    w[self.q_max * n + i]
                } else {
                    (self.cost.b0 + self.cost.b1 * self.q_max as f64) * ep + e0
                };
                acc + k.tail[r1] * top
            }
        }
    }

    fn post_value(&self, q: usize, i: usize, j0: f64) -> f64 {
        self.cost.posting(q as u64, self.grid.points()[i]) + j0
    }

    fn fill_post(&self, policy: &[Action], value: &mut [f64], rows: usize) {
        let n = self.n;
        for q in 1..rows {
            for i in 0..n {
                if policy[q * n + i] == Action::PostAll {
                    value[q * n + i] = self.post_value(q, i, value[i]);
                }
            }
        }
    }

    fn hmax(&self, policy: &[Action]) -> usize {
        let n = self.n;
        (0..=self.q_max).rev().find(|&q| policy[q * n..(q + 1) * n].contains(&Action::Hold)).unwrap_or(0)
    }

    /// Iterates the fixed-policy operator until the sup-norm change is <= tol.
    fn evaluate(&self, policy: &[Action], value: &mut [f64], tol: f64, sweeps: &mut usize) -> Result<()> {
        let n = self.n;
        let hmax = self.hmax(policy);
        let (a, gamma) = (self.cost.a, self.cost.gamma);
        let mut w = Vec::new();
        let mut next = vec![0.0; (hmax + 1) * n];
        self.fill_post(policy, value, self.q_max + 1);
        for local in 0.. {
            if local >= MAX_SWEEPS {
                return Err(Error::NonConvergence(format!("policy evaluation exceeded {MAX_SWEEPS} sweeps")));
            }
            self.expectations(value, hmax, &mut w);
            let mut delta: f64 = 0.0;
            for q in 0..=hmax {
                for i in 0..n {
                    let idx = q * n + i;
                    if policy[idx] == Action::Hold {
                        let v = a * q as f64 + gamma * self.cont(q, i, &w, hmax);
                        if !v.is_finite() {
                            return Err(Error::NonFinite { q, price_index: i });
                        }
                        delta = delta.max((v - value[idx]).abs());
                        next[idx] = v;
                    }
                }
            }
            for (idx, v) in next.iter().enumerate() {
                if policy[idx] == Action::Hold {
                    value[idx] = *v;
                }
            }
            self.fill_post(policy, value, hmax + 1);
            *sweeps += 1;
            if delta <= tol {
                break;
            }
        }
        self.fill_post(policy, value, self.q_max + 1);
        Ok(())
    }

    /// Greedy policy for `value` and the Bellman residual of `value`.
    fn improve(&self, policy: &[Action], value: &[f64], eps: f64) -> (Vec<Action>, f64) {
        let n = self.n;
        let hmax = self.hmax(policy);
        let (a, gamma) = (self.cost.a, self.cost.gamma);
        let mut w = Vec::new();
        self.expectations(value, hmax, &mut w);
        let c0: Vec<f64> = (0..n).map(|i| self.cont(0, i, &w, hmax)).collect();
        let mut next = vec![Action::Hold; policy.len()];
        let mut residual: f64 = 0.0;
        for q in 0..=self.q_max {
            for i in 0..n {
                let idx = q * n + i;
                let hold = a * q as f64 + gamma * if q == 0 { c0[i] } else { self.cont(q, i, &w, hmax) };
                let best = if q == 0 {
                    hold
                } else {
                    let post = self.post_value(q, i, gamma * c0[i]);
                    if hold - post > eps {
                        next[idx] = Action::PostAll;
                    }
                    hold.min(post)
                };
                residual = residual.max((best - value[idx]).abs());
            }
        }
        (next, residual)
    }
}

pub fn solve(grid: &PriceGrid, demand: &DemandModel, g: f64, cost: &CostParams, config: &MdpConfig) -> Result<MdpSolution> {
    solve_from(grid, demand, g, cost, config, None)
}

/// Like [`solve`], optionally starting policy iteration from another
/// solution on the same grid (typically a neighbouring fee).
pub fn solve_from(
    grid: &PriceGrid,
    demand: &DemandModel,
    g: f64,
    cost: &CostParams,
    config: &MdpConfig,
    warm: Option<&MdpSolution>,
) -> Result<MdpSolution> {
    config.validate()?;
    cost.validate()?;
    demand.validate()?;
    let rate = crate::process::arrival_rate(demand, g)?;
    let n = grid.len();
    let q_max = config.q_max;
    let mut ep = vec![0.0; n];
    grid.expect(grid.points(), &mut ep);
    let ctx = Ctx { grid, cost: *cost, q_max, n, boundary: config.boundary, kernel: Kernel::new(rate, q_max), ep };

    let size = (q_max + 1) * n;
    let (mut policy, mut value) = match warm {
        Some(s) if s.q_max == q_max && s.n_price == n && s.boundary == config.boundary => {
            (s.policy.clone(), s.value.clone())
        }
        _ => {
            let mut p = vec![Action::Hold; size];
            for q in 1..=q_max {
                for i in 0..n {
                    if cost.posting(q as u64, grid.points()[i]) < cost.a * q as f64 {
                        p[q * n + i] = Action::PostAll;
                    }
                }
            }
            (p, vec![0.0; size])
        }
    };

    let mut sweeps = 0;
    for round in 1..=config.max_iters {
        ctx.evaluate(&policy, &mut value, config.tol, &mut sweeps)?;
        let (next, residual) = ctx.improve(&policy, &value, config.tol);
        if next == policy {
            let thresholds = (0..n)
                .map(|i| (0..=q_max).rev().find(|&q| policy[q * n + i] == Action::Hold).unwrap_or(0))
                .collect();
            return Ok(MdpSolution {
                fee: g,
                q_max,
                n_price: n,
                boundary: config.boundary,
                value,
                policy,
                thresholds,
                residual,
                rounds: round,
                sweeps,
            });
        }
        policy = next;
    }
    Err(Error::NonConvergence(format!("policy still changing after {} improvement rounds", config.max_iters)))
}
