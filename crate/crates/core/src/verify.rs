//! Acceptance checks: thirteen pass/fail criteria over the whole toolkit.
//!
//! Expensive shared pieces (policy caches, the budget-balance root, the
//! adaptive iid run) are computed once per [`Suite`] and reused, so the time
//! attributed to a criterion includes whatever shared work it triggered first.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use crate::config::Config;
use crate::controller::ControllerMode;
use crate::cost::{cost_upper_bound, CostParams};
use crate::error::{Error, Result};
use crate::fees::{
    check_existence_condition, congestion_fee_closed_form, find_budget_balance_fee, pnl_curve, renewal_check,
    stationary_split, BudgetBalance, FeeBounds, McConfig, PnlEstimate,
};
use crate::io::artifacts;
use crate::io::csv::{write_csv, Schema};
use crate::io::plot::histogram_mode;
use crate::mdp::{
    bellman_backup_full, build_price_grid, extract_thresholds, solve, Action, MdpConfig, MdpSolution,
};
use crate::process::{PriceMode, RngStream};
use crate::sim::{estimate_switch_matrix, kappa_sweep, run_scenario_with, KappaRow, PolicyCache, Trajectory};

pub const CRITERIA: usize = 13;
const KAPPAS: [usize; 4] = [1, 4, 16, 64];

/// Sizes that differ between the full suite and `--quick`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scale {
    pub mc_blocks: usize,
    pub renewal_blocks: usize,
    pub congestion_updates: usize,
    pub adaptive_updates: usize,
    pub replicas: usize,
    pub switch_batches: usize,
    pub kappa_batches: usize,
}

impl Scale {
    pub fn full(cfg: &Config) -> Self {
        Self {
            mc_blocks: cfg.sim.mc_blocks,
            renewal_blocks: 1_000_000,
            congestion_updates: 20_000,
            adaptive_updates: cfg.sim.horizon_updates,
            replicas: cfg.sim.replicas,
            switch_batches: cfg.sim.switch_batches,
            kappa_batches: 100_000,
        }
    }

    pub fn quick() -> Self {
        Self {
            mc_blocks: 200_000,
            renewal_blocks: 200_000,
            congestion_updates: 5_000,
            adaptive_updates: 10_000,
            replicas: 5,
            switch_batches: 5_000,
            kappa_batches: 20_000,
        }
    }

    /// Replicas that must succeed: 8 of 10, scaled.
    fn required(&self) -> usize {
        (self.replicas * 8).div_ceil(10)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
    pub target: String,
    pub elapsed: Duration,
}

type Shared<T> = OnceLock<std::result::Result<T, String>>;

fn shared<T: Clone>(cell: &Shared<T>, init: impl FnOnce() -> Result<T>) -> Result<T> {
    cell.get_or_init(|| init().map_err(|e| e.to_string())).clone().map_err(Error::NonConvergence)
}

pub struct Suite {
    config: Config,
    scale: Scale,
    caches: [Shared<Arc<PolicyCache>>; 2],
    budget: [Shared<BudgetBalance>; 2],
    curve: Shared<Vec<PnlEstimate>>,
    adaptive: Shared<Arc<Vec<Trajectory>>>,
    kappa: Shared<Vec<KappaRow>>,
    switch: Shared<(f64, f64, f64)>,
}

struct Outcome {
    passed: bool,
    measured: String,
    target: String,
}

fn outcome(passed: bool, measured: String, target: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, measured, target: target.into() })
}

fn mode_index(mode: PriceMode) -> usize {
    match mode {
        PriceMode::Ar1 => 0,
        PriceMode::Iid => 1,
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

impl Suite {
    pub fn new(config: Config, quick: bool) -> Self {
        let scale = if quick { Scale::quick() } else { Scale::full(&config) };
        Self::with_scale(config, scale)
    }

    pub fn with_scale(config: Config, scale: Scale) -> Self {
        Self {
            config,
            scale,
            caches: Default::default(),
            budget: Default::default(),
            curve: OnceLock::new(),
            adaptive: OnceLock::new(),
            kappa: OnceLock::new(),
            switch: OnceLock::new(),
        }
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    fn stream(&self, id: u64) -> RngStream {
        RngStream::new(self.config.sim.seed).child(1000 + id)
    }

    fn config_for(&self, mode: PriceMode) -> Config {
        let mut c = self.config;
        c.price.mode = mode;
        c
    }

    fn p_star(&self) -> Result<f64> {
        congestion_fee_closed_form(&self.config.demand, self.config.controller.lambda_bar)
    }

    fn cache(&self, mode: PriceMode) -> Result<Arc<PolicyCache>> {
        shared(&self.caches[mode_index(mode)], || {
            let c = self.config_for(mode);
            Ok(Arc::new(PolicyCache::new(c.model(), c.mdp)?))
        })
    }

    fn budget(&self, mode: PriceMode) -> Result<BudgetBalance> {
        shared(&self.budget[mode_index(mode)], || {
            let mut mc = McConfig::new(self.scale.mc_blocks, self.stream(mode_index(mode) as u64));
            mc.fee_tol = self.config.sim.fee_tol;
            find_budget_balance_fee(&*self.cache(mode)?, &mc)
        })
    }

    fn f_star(&self, mode: PriceMode) -> Result<f64> {
        Ok(self.budget(mode)?.fee)
    }

    /// Eleven evenly spaced fees across the admissible interval.
    fn curve_fees(&self) -> Vec<f64> {
        let b = FeeBounds::for_demand(&self.config.demand);
        (0..11).map(|i| b.lo + (b.hi - b.lo) * i as f64 / 10.0).collect()
    }

    fn curve(&self) -> Result<Vec<PnlEstimate>> {
        shared(&self.curve, || {
            pnl_curve(&self.curve_fees(), &*self.cache(PriceMode::Iid)?, self.scale.mc_blocks, self.stream(0))
        })
    }

    fn run(&self, mode: PriceMode, kind_of: crate::controller::StepKind, ctl: ControllerMode, horizon: usize) -> Result<Vec<Trajectory>> {
        let mut c = self.config_for(mode);
        c.controller.step_kind = kind_of;
        let (sf, sp) = crate::config::default_steps(kind_of);
        if kind_of != self.config.controller.step_kind {
            c.controller.step_f = sf;
            c.controller.step_p = sp;
        }
        c.sim.horizon_updates = horizon;
        c.sim.replicas = self.scale.replicas;
        let sc = c.scenario_config(ctl)?;
        run_scenario_with(&sc, &*self.cache(mode)?)
    }

    fn adaptive(&self) -> Result<Arc<Vec<Trajectory>>> {
        shared(&self.adaptive, || {
            let kind = crate::controller::StepKind::Decreasing;
            Ok(Arc::new(self.run(PriceMode::Iid, kind, ControllerMode::Adaptive, self.scale.adaptive_updates)?))
        })
    }

    /// `(pi_f, p01, p10)` at the frozen targets with κ = 1.
    fn switch(&self) -> Result<(f64, f64, f64)> {
        shared(&self.switch, || {
            let c = &self.config;
            let est = estimate_switch_matrix(
                &*self.cache(PriceMode::Iid)?,
                self.f_star(PriceMode::Iid)?,
                self.p_star()?,
                self.scale.switch_batches,
                1,
                c.controller.lambda_bar,
                c.sim.tau_max,
                self.stream(9),
            )?;
            let (pi_f, _) = stationary_split(&est.matrix)?;
            Ok((pi_f, est.matrix.p01, est.matrix.p10))
        })
    }

    fn kappa_rows(&self) -> Result<Vec<KappaRow>> {
        shared(&self.kappa, || {
            let c = &self.config;
            kappa_sweep(
                &*self.cache(PriceMode::Iid)?,
                self.f_star(PriceMode::Iid)?,
                self.p_star()?,
                c.sim.fee_tol,
                &KAPPAS,
                self.scale.kappa_batches,
                c.controller.lambda_bar,
                c.sim.tau_max,
                self.stream(10),
            )
        })
    }

    pub fn run_all(&self) -> Vec<CriterionResult> {
        (1..=CRITERIA).map(|id| self.criterion(id)).collect()
    }

    pub fn criterion(&self, id: usize) -> CriterionResult {
        let start = Instant::now();
        let (name, res) = match id {
            1 => ("binary-action optimality", self.c1()),
            2 => ("discrete concavity", self.c2()),
            3 => ("threshold structure", self.c3()),
            4 => ("closed-form congestion fee", self.c4()),
            5 => ("budget-balance root", self.c5()),
            6 => ("cost upper bound", self.c6()),
            7 => ("renewal identity", self.c7()),
            8 => ("adaptive convergence", self.c8()),
            9 => ("regime proportion limit", self.c9()),
            10 => ("batch-size scaling", self.c10()),
            11 => ("AR(1) robustness", self.c11()),
            12 => ("production solve time", self.c12()),
            13 => ("determinism", self.c13()),
            _ => ("unknown", Err(Error::InvalidParam(format!("no criterion {id}")))),
        };
        let elapsed = start.elapsed();
        match res {
            Ok(o) => CriterionResult { id, name, passed: o.passed, measured: o.measured, target: o.target, elapsed },
            Err(e) => CriterionResult {
                id,
                name,
                passed: false,
                measured: format!("error: {e}"),
                target: String::new(),
                elapsed,
            },
        }
    }

    fn small_solutions(&self) -> Result<Vec<(PriceMode, f64, MdpSolution, crate::mdp::PriceGrid)>> {
        let mdp = MdpConfig { q_max: 30, n_price: 21, ..self.config.mdp };
        let mut out = Vec::new();
        for mode in [PriceMode::Ar1, PriceMode::Iid] {
            let c = self.config_for(mode);
            let grid = build_price_grid(&c.price, &mdp)?;
            for fee in [0.0, self.p_star()?, 1e-4] {
                let sol = solve(&grid, &c.demand, fee, &c.cost, &mdp)?;
                out.push((mode, fee, sol, grid.clone()));
            }
        }
        Ok(out)
    }

    fn c1(&self) -> Result<Outcome> {
        let start = Instant::now();
        let sols = self.small_solutions()?;
        let (mut states, mut non_binary, mut disagree, mut max_rel) = (0usize, 0usize, 0usize, 0.0f64);
        for (mode, fee, sol, grid) in &sols {
            let c = self.config_for(*mode);
            for q in 0..=sol.q_max {
                for i in 0..grid.len() {
                    let (s, v) = bellman_backup_full(sol, q, i, grid, &c.demand, *fee, &c.cost);
                    states += 1;
                    non_binary += usize::from(s != 0 && s != q);
                    let policy = if sol.action(q, i) == Action::Hold { 0 } else { q };
                    disagree += usize::from(s != policy);
                    max_rel = max_rel.max((v - sol.value(q, i)).abs() / sol.value(q, i).abs().max(1e-300));
                }
            }
        }
        let secs = start.elapsed().as_secs_f64();
        outcome(
            non_binary == 0 && disagree == 0 && max_rel <= 1e-9 && secs < 30.0,
            format!("states={states} non_binary={non_binary} policy_mismatch={disagree} max_rel={max_rel:.2e}"),
            "argmin in {0;q} everywhere; rel <= 1e-9; < 30 s",
        )
    }

    fn c2(&self) -> Result<Outcome> {
        let (mut worst, mut violations) = (f64::INFINITY, 0usize);
        for (_, _, sol, grid) in self.small_solutions()? {
            for i in 0..grid.len() {
                for q in 0..sol.q_max.saturating_sub(1) {
                    let (a, b, c) = (sol.value(q, i), sol.value(q + 1, i), sol.value(q + 2, i));
                    let slack = 2.0 * b - a - c + 1e-8 * (1.0 + b.abs());
                    worst = worst.min(slack);
                    violations += usize::from(slack < 0.0);
                }
            }
        }
        outcome(violations == 0, format!("violations={violations} min_slack={worst:.3e}"), "2J(q+1) >= J(q)+J(q+2) - 1e-8(1+|J|)")
    }

    fn c3(&self) -> Result<Outcome> {
        let settings = [(5e-5, 1000.0, 500.0), (3e-5, 1000.0, 500.0), (1e-4, 1000.0, 500.0), (5e-5, 20000.0, 100.0), (5e-5, 5000.0, 250.0)];
        let (mut solved, mut bad) = (0usize, Vec::new());
        for (a, b0, b1) in settings {
            let cost = CostParams { a, b0, b1, ..self.config.cost };
            for mode in [PriceMode::Ar1, PriceMode::Iid] {
                let c = self.config_for(mode);
                let grid = build_price_grid(&c.price, &c.mdp)?;
                for fee in [0.0, self.p_star()?, 1e-4] {
                    let sol = solve(&grid, &c.demand, fee, &cost, &c.mdp)?;
                    solved += 1;
                    if let Err(e) = extract_thresholds(&sol) {
                        bad.push(format!("a={a:e} b0={b0} b1={b1} {}: {e}", mode.name()));
                    }
                }
            }
        }
        outcome(
            bad.is_empty(),
            format!("policies={solved} violations={}{}", bad.len(), bad.first().map(|b| format!(" first: {b}")).unwrap_or_default()),
            "every column single-switch hold->post",
        )
    }

    fn c4(&self) -> Result<Outcome> {
        let d = &self.config.demand;
        let lambda_bar = self.config.controller.lambda_bar;
        let p_star = self.p_star()?;
        let direct = (d.lambda0 - lambda_bar) / d.k;
        let printed = format!("{p_star:.4e}");
        let closed_ok = p_star == direct && (lambda_bar != 120.0 || printed == "3.5928e-5");
        let runs = self.run(PriceMode::Iid, crate::controller::StepKind::Decreasing, ControllerMode::CongestionOnly, self.scale.congestion_updates)?;
        let hits = runs.iter().filter(|t| within(t.summary.final_p, p_star, 0.05)).count();
        let worst = runs.iter().map(|t| (t.summary.final_p / p_star - 1.0).abs()).fold(0.0, f64::max);
        outcome(
            closed_ok && hits >= self.scale.required(),
            format!("p*={printed} within5%={hits}/{} worst_rel={worst:.4}", runs.len()),
            format!("p* = 3.5928e-5; >= {}/{} within 5%; < 2 min", self.scale.required(), self.scale.replicas),
        )
    }

    fn c5(&self) -> Result<Outcome> {
        let c = &self.config;
        let ex = check_existence_condition(&c.demand, &c.cost, c.price.mu);
        // the pinned margin only applies to the default costs
        let margin_ok = ex.holds && (c.cost != CostParams::default() || (ex.margin - 1.337e-3).abs() <= 1e-6);
        let bb = self.budget(PriceMode::Iid)?;
        let root_ok = bb.estimate.pnl.abs() <= 3.0 * bb.estimate.std_err;
        let curve = self.curve()?;
        let monotone = curve.windows(2).all(|w| {
            w[1].pnl >= w[0].pnl - 3.0 * (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt()
        });
        let signs: Vec<i8> = curve
            .iter()
            .filter(|e| e.pnl.abs() > 3.0 * e.std_err)
            .map(|e| if e.pnl > 0.0 { 1 } else { -1 })
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        outcome(
            margin_ok && root_ok && monotone && changes == 1,
            format!(
                "margin={:.5e} f*={:.5e} pnl/se={:.2} monotone={monotone} sign_changes={changes}",
                ex.margin,
                bb.fee,
                bb.estimate.pnl / bb.estimate.std_err
            ),
            "margin 1.337e-3; |pnl(f*)| <= 3 se; curve nondecreasing; one sign change; < 10 min",
        )
    }

    fn c6(&self) -> Result<Outcome> {
        let c = &self.config;
        let mut probes = self.budget(PriceMode::Iid)?.probes;
        probes.extend(self.curve()?);
        let mut worst = f64::NEG_INFINITY;
        let mut violations = 0;
        for e in &probes {
            let bound = cost_upper_bound(e.fee, &c.cost, &c.demand, c.price.mu)?;
            let z = (e.expected_cost - bound) / e.std_err.max(f64::MIN_POSITIVE);
            worst = worst.max(z);
            violations += usize::from(e.expected_cost > bound + 3.0 * e.std_err);
        }
        outcome(
            violations == 0,
            format!("probes={} violations={violations} max_z={worst:.2}", probes.len()),
            "E[cost] <= (b0+b1*lambda0-b1*k*f)*mu + 3 se",
        )
    }

    fn c7(&self) -> Result<Outcome> {
        let cache = self.cache(PriceMode::Iid)?;
        let n = self.scale.renewal_blocks;
        let at_p = renewal_check(self.p_star()?, &cache, n, self.stream(7))?;
        let at_f = renewal_check(self.f_star(PriceMode::Iid)?, &cache, n, self.stream(8))?;
        let zl = at_f.lhs / at_f.lhs_se;
        let zr = at_f.rhs / at_f.rhs_se;
        outcome(
            at_p.rel_gap <= 0.02 && zl.abs() <= 3.0 && zr.abs() <= 3.0,
            format!("rel_gap(p*)={:.2e} at f*: lhs/se={zl:.2} rhs/se={zr:.2}", at_p.rel_gap),
            "rel_gap <= 0.02; both sides within 3 se of 0 at f*",
        )
    }

    fn c8(&self) -> Result<Outcome> {
        let f_star = self.f_star(PriceMode::Iid)?;
        let p_star = self.p_star()?;
        let runs = self.adaptive()?;
        let min_visits = runs.iter().map(|t| t.records.last().map_or(0, |r| r.i.min(r.j))).min().unwrap_or(0);
        let hits = runs
            .iter()
            .filter(|t| within(t.summary.final_f, f_star, 0.05) && within(t.summary.final_p, p_star, 0.05))
            .count();
        let wf = runs.iter().map(|t| (t.summary.final_f / f_star - 1.0).abs()).fold(0.0, f64::max);
        let wp = runs.iter().map(|t| (t.summary.final_p / p_star - 1.0).abs()).fold(0.0, f64::max);
        outcome(
            min_visits >= 100 && hits >= self.scale.required(),
            format!("min_visits={min_visits} within5%={hits}/{} worst_f={wf:.4} worst_p={wp:.4}", runs.len()),
            format!("visits >= 100; >= {}/{} within 5%; < 10 min", self.scale.required(), self.scale.replicas),
        )
    }

    fn c9(&self) -> Result<Outcome> {
        let (pi_f, p01, p10) = self.switch()?;
        let runs = self.adaptive()?;
        let worst = runs.iter().map(|t| (t.summary.i_frac - pi_f).abs()).fold(0.0, f64::max);
        outcome(
            worst <= 0.05,
            format!("pi_f={pi_f:.4} p01={p01:.4} p10={p10:.4} max|i/t-pi_f|={worst:.4}"),
            "|i/t - pi_f| <= 0.05 in every replica",
        )
    }

    fn c10(&self) -> Result<Outcome> {
        let rows = self.kappa_rows()?;
        let minority: Vec<f64> = rows.iter().map(|r| r.minority).collect();
        let decreasing = minority.windows(2).all(|w| w[1] < w[0]);
        let ratios: Vec<f64> = minority.windows(2).map(|w| w[0] / w[1]).collect();
        let in_band = ratios.iter().all(|r| (1.4..=2.8).contains(r));
        let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
        outcome(
            decreasing && in_band,
            format!("minority=[{}] ratios=[{}]", fmt(&minority), fmt(&ratios)),
            "decreasing over kappa 1/4/16/64; ratios in [1.4; 2.8]; < 15 min",
        )
    }

    fn c11(&self) -> Result<Outcome> {
        let f_star = self.f_star(PriceMode::Ar1)?;
        let p_star = self.p_star()?;
        let h = self.scale.adaptive_updates;
        let dec = self.run(PriceMode::Ar1, crate::controller::StepKind::Decreasing, ControllerMode::Adaptive, h)?;
        let con = self.run(PriceMode::Ar1, crate::controller::StepKind::Constant, ControllerMode::Adaptive, h)?;
        let dec_hits = dec.iter().filter(|t| within(t.summary.final_f, f_star, 0.10)).count();
        let dec_mean = dec.iter().map(|t| t.summary.final_f).sum::<f64>() / dec.len() as f64;
        let mut const_hits = 0;
        let (mut fm, mut pm) = (0.0, 0.0);
        for t in &con {
            let half = &t.records[t.records.len() / 2..];
            let f_mode = histogram_mode(&half.iter().map(|r| r.f_last).collect::<Vec<_>>(), 40).unwrap_or(f64::NAN);
            let p_mode = histogram_mode(&half.iter().map(|r| r.p_last).collect::<Vec<_>>(), 40).unwrap_or(f64::NAN);
            fm += f_mode / con.len() as f64;
            pm += p_mode / con.len() as f64;
            const_hits += usize::from(within(f_mode, f_star, 0.10) && within(p_mode, p_star, 0.10));
        }
        let need = self.scale.required();
        outcome(
            dec_hits >= need && const_hits >= need,
            format!(
                "f*={f_star:.4e} dec: within10%={dec_hits}/{} mean_f/f*={:.3}; const: within10%={const_hits}/{} mode_f/f*={:.3} mode_p/p*={:.3}",
                dec.len(),
                dec_mean / f_star,
                con.len(),
                fm / f_star,
                pm / p_star
            ),
            format!(">= {need}/{} replicas within 10% in each scenario", self.scale.replicas),
        )
    }

    fn c12(&self) -> Result<Outcome> {
        let mdp = MdpConfig { q_max: 200, n_price: 101, ..self.config.mdp };
        let mut parts = Vec::new();
        let mut worst = 0.0f64;
        for mode in [PriceMode::Ar1, PriceMode::Iid] {
            let c = self.config_for(mode);
            let start = Instant::now();
            let grid = build_price_grid(&c.price, &mdp)?;
            let sol = solve(&grid, &c.demand, self.p_star()?, &c.cost, &mdp)?;
            let secs = start.elapsed().as_secs_f64();
            worst = worst.max(secs);
            parts.push(format!("{}: rounds={} sweeps={}", mode.name(), sol.rounds, sol.sweeps));
        }
        // the time itself goes to the elapsed column; measured stays reproducible
        outcome(worst < 60.0, parts.join(" "), "q_max=200 n_price=101 solve < 60 s")
    }

    fn c13(&self) -> Result<Outcome> {
        let a = scratch_dir("a")?;
        let b = scratch_dir("b")?;
        let res = (|| {
            determinism_bundle(&self.config, &a)?;
            determinism_bundle(&self.config, &b)?;
            compare_dirs(&a, &b)
        })();
        let _ = fs::remove_dir_all(&a);
        let _ = fs::remove_dir_all(&b);
        let (files, differing) = res?;
        outcome(
            files > 0 && differing.is_empty(),
            format!("files={files} differing={}{}", differing.len(), differing.first().map(|d| format!(" ({d})")).unwrap_or_default()),
            "two runs with one seed give byte-identical CSVs",
        )
    }

    /// Writes the acceptance table and the artifacts behind it.
    pub fn write_artifacts(&self, dir: &Path, results: &[CriterionResult]) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_acceptance(&dir.join("acceptance.csv"), results)?;
        fs::write(dir.join("config.toml"), self.config.to_toml())?;
        if let Some(Ok(curve)) = self.curve.get() {
            artifacts::write_pnl_curve(&dir.join("pnl_curve.csv"), curve)?;
        }
        if let Some(Ok(rows)) = self.kappa.get() {
            artifacts::write_kappa_sweep(&dir.join("kappa_sweep.csv"), rows)?;
        }
        if let Some(Ok(runs)) = self.adaptive.get() {
            artifacts::write_summary(&dir.join("summary.csv"), runs)?;
            for t in runs.iter() {
                artifacts::write_trajectory(&dir.join(format!("trajectory_r{}.csv", t.summary.replica)), t)?;
            }
        }
        Ok(())
    }
}

pub fn write_acceptance(path: &Path, results: &[CriterionResult]) -> Result<()> {
    let rows = results.iter().map(|r| {
        vec![r.id.to_string(), r.passed.to_string(), r.measured.replace(',', ";"), r.target.replace(',', ";")]
    });
    write_csv(path, &Schema::ACCEPTANCE, rows)
}

/// One line per criterion.
pub fn format_result(r: &CriterionResult) -> String {
    format!(
        "[{}] {:>2} {:<28} {}  (target: {}; {:.1} s)",
        if r.passed { "PASS" } else { "FAIL" },
        r.id,
        r.name,
        r.measured,
        r.target,
        r.elapsed.as_secs_f64()
    )
}

fn scratch_dir(tag: &str) -> Result<PathBuf> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!("l2lab-det-{}-{n}-{tag}", std::process::id()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// A reduced artifact set built from scratch: nothing is shared between
/// calls, so identical bytes mean the whole pipeline is reproducible.
pub fn determinism_bundle(config: &Config, dir: &Path) -> Result<()> {
    let mut c = *config;
    c.price.mode = PriceMode::Iid;
    let small = MdpConfig { q_max: 30, n_price: 21, ..c.mdp };
    let grid = build_price_grid(&c.price, &small)?;
    let p_star = congestion_fee_closed_form(&c.demand, c.controller.lambda_bar)?;
    let sol = solve(&grid, &c.demand, p_star, &c.cost, &small)?;
    artifacts::write_solution(&dir.join("solution.csv"), &sol, &grid)?;
    artifacts::write_thresholds(&dir.join("thresholds.csv"), &extract_thresholds(&sol)?, &grid)?;

    let cache = PolicyCache::new(c.model(), c.mdp)?;
    let stream = RngStream::new(c.sim.seed).child(2000);
    let hi = FeeBounds::for_demand(&c.demand).hi;
    let fees: Vec<f64> = (0..5).map(|i| hi * i as f64 / 4.0).collect();
    artifacts::write_pnl_curve(&dir.join("pnl_curve.csv"), &pnl_curve(&fees, &cache, 20_000, stream)?)?;

    c.sim.horizon_updates = 2_000;
    c.sim.replicas = 2;
    let runs = run_scenario_with(&c.scenario_config(ControllerMode::Adaptive)?, &cache)?;
    artifacts::write_summary(&dir.join("summary.csv"), &runs)?;
    for t in &runs {
        artifacts::write_trajectory(&dir.join(format!("trajectory_r{}.csv", t.summary.replica)), t)?;
    }
    let f_guess = runs[0].summary.final_f;
    let est = estimate_switch_matrix(&cache, f_guess, p_star, 2_000, 1, c.controller.lambda_bar, c.sim.tau_max, stream.child(1))?;
    let pi = stationary_split(&est.matrix).unwrap_or((f64::NAN, f64::NAN));
    artifacts::write_switch_matrix(&dir.join("switch_matrix.csv"), 1, f_guess, p_star, &est.matrix, pi, 2_000)?;
    Ok(())
}

fn compare_dirs(a: &Path, b: &Path) -> Result<(usize, Vec<String>)> {
    let mut names: Vec<_> = fs::read_dir(a)?.map(|e| e.map(|e| e.file_name())).collect::<std::io::Result<_>>()?;
    names.sort();
    let mut differing = Vec::new();
    for name in &names {
        let other = b.join(name);
        if !other.exists() || fs::read(a.join(name))? != fs::read(&other)? {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    Ok((names.len(), differing))
}
