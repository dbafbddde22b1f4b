use crate::cost::CostParams;
use crate::process::DemandModel;

use super::{Boundary, MdpSolution, PriceGrid};

/// Evaluates every action `s in 0..=q` at state `(q, i)` against the
/// solution's value table and returns the best `(s, value)`; ties go to the
/// smaller `s`.
///
/// Deliberately independent of the solver: the arrival pmf is taken from the
/// closed form term by term and summed far into the tail, and overflow
/// states are valued from the table directly.
pub fn bellman_backup_full(
    solution: &MdpSolution,
    q: usize,
    i: usize,
    grid: &PriceGrid,
    demand: &DemandModel,
    g: f64,
    cost: &CostParams,
) -> (usize, f64) {
    let rate = demand.rate(g);
    let q_max = solution.q_max;
    let reach = q_max + (rate + 20.0 * rate.sqrt()) as usize + 60;
    let pmf: Vec<f64> = (0..=reach)
        .map(|a| {
            if rate == 0.0 {
                if a == 0 { 1.0 } else { 0.0 }
            } else {
                (a as f64 * rate.ln() - rate - libm::lgamma(a as f64 + 1.0)).exp()
            }
        })
        .collect();
    let points = grid.points();
    let value_at = |qq: usize, j: usize| -> f64 {
        if qq <= q_max {
            solution.value(qq, j)
        } else {
            match solution.boundary {
                Boundary::ForcedPost => (cost.b0 + cost.b1 * qq as f64) * points[j] + solution.value(0, j),
                Boundary::Lump => solution.value(q_max, j),
            }
        }
    };
    let row = grid.row(i);
    let mut best = (0, f64::INFINITY);
    for s in 0..=q {
        let left = q - s;
        let mut ev = 0.0;
        for (j, &t) in row.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let inner: f64 = pmf.iter().enumerate().map(|(a, &pa)| pa * value_at(left + a, j)).sum();
            ev += t * inner;
        }
        let posting = if s > 0 { (cost.b0 + cost.b1 * s as f64) * points[i] } else { 0.0 };
        let total = cost.a * left as f64 + posting + cost.gamma * ev;
        if total < best.1 {
            best = (s, total);
        }
    }
    best
}
