//! Writers for every CSV and plot the toolkit produces.

use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::fees::{PnlEstimate, SwitchMatrix};
use crate::mdp::{MdpSolution, PriceGrid};
use crate::sim::{KappaRow, Trajectory};

use super::csv::{fmt_num, write_csv, Schema};
use super::plot::{histogram, line_plot, RefLine, Series};

pub fn write_solution(path: &Path, sol: &MdpSolution, grid: &PriceGrid) -> Result<()> {
    let rows = (0..=sol.q_max).flat_map(|q| {
        (0..sol.n_price).map(move |i| {
            vec![
                q.to_string(),
                i.to_string(),
                fmt_num(grid.points()[i]),
                fmt_num(sol.value(q, i)),
                sol.action(q, i).code().to_string(),
            ]
        })
    });
    write_csv(path, &Schema::SOLUTION, rows)
}

pub fn write_thresholds(path: &Path, thresholds: &[usize], grid: &PriceGrid) -> Result<()> {
    let rows = thresholds
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i.to_string(), fmt_num(grid.points()[i]), t.to_string()]);
    write_csv(path, &Schema::THRESHOLDS, rows)
}

pub fn write_pnl_curve(path: &Path, curve: &[PnlEstimate]) -> Result<()> {
    let rows = curve.iter().map(|e| {
        vec![fmt_num(e.fee), fmt_num(e.revenue), fmt_num(e.expected_cost), fmt_num(e.pnl), fmt_num(e.std_err)]
    });
    write_csv(path, &Schema::PNL_CURVE, rows)
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<()> {
    let rows = t.records.iter().map(|r| {
        vec![
            r.update_index.to_string(),
            r.block_index.to_string(),
            r.delta.to_string(),
            fmt_num(r.g),
            fmt_num(r.f_last),
            fmt_num(r.p_last),
            fmt_num(r.x_obs),
            fmt_num(r.y_obs),
            r.tau.to_string(),
            r.i.to_string(),
            r.j.to_string(),
            fmt_num(r.i_frac),
            fmt_num(r.j_frac),
        ]
    });
    write_csv(path, &Schema::TRAJECTORY, rows)
}

pub fn write_summary(path: &Path, ts: &[Trajectory]) -> Result<()> {
    let rows = ts.iter().map(|t| {
        let s = &t.summary;
        vec![
            s.replica.to_string(),
            fmt_num(s.final_f),
            fmt_num(s.final_p),
            fmt_num(s.i_frac),
            fmt_num(s.j_frac),
            fmt_num(s.mean_queue),
            fmt_num(s.total_compensation),
            s.blocks.to_string(),
            s.forced_closes.to_string(),
        ]
    });
    write_csv(path, &Schema::SUMMARY, rows)
}

pub fn write_switch_matrix(path: &Path, kappa: usize, fee_f: f64, fee_p: f64, m: &SwitchMatrix, pi: (f64, f64), n_batches: usize) -> Result<()> {
    let row = vec![
        kappa.to_string(),
        fmt_num(fee_f),
        fmt_num(fee_p),
        fmt_num(m.p00),
        fmt_num(m.p01),
        fmt_num(m.p10),
        fmt_num(m.p11),
        fmt_num(pi.0),
        fmt_num(pi.1),
        n_batches.to_string(),
    ];
    write_csv(path, &Schema::SWITCH_MATRIX, [row])
}

pub fn write_kappa_sweep(path: &Path, rows: &[KappaRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![r.kappa.to_string(), fmt_num(r.p01), fmt_num(r.p10), fmt_num(r.pi_f), fmt_num(r.pi_p), fmt_num(r.minority)]
    });
    write_csv(path, &Schema::KAPPA_SWEEP, rows)
}

/// Fee and regime-share series for one replica; with `histograms`, also the
/// distribution of the last half of each fee sequence. Returns file names.
pub fn write_scenario_plots(
    dir: &Path,
    t: &Trajectory,
    f_star: f64,
    p_star: f64,
    histograms: bool,
) -> Result<Vec<String>> {
    let series = |get: fn(&crate::sim::Record) -> f64| -> Vec<(f64, f64)> {
        t.records.iter().map(|r| (r.update_index as f64, get(r))).collect()
    };
    let mut files = vec![
        (
            "fee_f.svg",
            line_plot("budget-balance fee f_t", &[Series { name: "f_t", points: series(|r| r.f_last) }], &[RefLine {
                name: "f*",
                y: f_star,
            }]),
        ),
        (
            "fee_p.svg",
            line_plot("congestion fee p_t", &[Series { name: "p_t", points: series(|r| r.p_last) }], &[RefLine {
                name: "p*",
                y: p_star,
            }]),
        ),
        ("share_i.svg", line_plot("budget-balance share i(t)/t", &[Series { name: "i/t", points: series(|r| r.i_frac) }], &[])),
        ("share_j.svg", line_plot("congestion share j(t)/t", &[Series { name: "j/t", points: series(|r| r.j_frac) }], &[])),
    ];
    if histograms {
        let half = &t.records[t.records.len() / 2..];
        let f: Vec<f64> = half.iter().map(|r| r.f_last).collect();
        let p: Vec<f64> = half.iter().map(|r| r.p_last).collect();
        files.push(("hist_f.svg", histogram("f_t, last half", &f, 40, &[RefLine { name: "f*", y: f_star }])));
        files.push(("hist_p.svg", histogram("p_t, last half", &p, 40, &[RefLine { name: "p*", y: p_star }])));
    }
    let mut names = Vec::new();
    for (name, svg) in files {
        fs::write(dir.join(name), svg)?;
        names.push(name.to_string());
    }
    Ok(names)
}
