//! Closed-loop experiments: blocks, posting periods, the fee controller on
//! top, and the regime-chain estimates.

mod engine;
mod switch;

use std::str::FromStr;

use rayon::prelude::*;

use crate::controller::{select_next, ControllerMode, ControllerState, PeriodStats, StepKind, StepSchedule};
use crate::error::{Error, Result};
use crate::fees::FeeBounds;
use crate::mdp::MdpConfig;
use crate::process::{PriceMode, RngStream};

pub use engine::{run_posting_period, BlockOutcome, FeeLattice, Model, PolicyCache, World};
pub use switch::{estimate_switch_matrix, kappa_sweep, KappaRow, SwitchEstimate};

pub const TAU_MAX: u64 = 10_000;

/// The four calibrated experiments: price mode x step schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    IidDec,
    IidConst,
    Ar1Dec,
    Ar1Const,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::IidDec, Scenario::IidConst, Scenario::Ar1Dec, Scenario::Ar1Const];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::IidDec => "iid-dec",
            Scenario::IidConst => "iid-const",
            Scenario::Ar1Dec => "ar1-dec",
            Scenario::Ar1Const => "ar1-const",
        }
    }

    pub fn price_mode(self) -> PriceMode {
        match self {
            Scenario::IidDec | Scenario::IidConst => PriceMode::Iid,
            Scenario::Ar1Dec | Scenario::Ar1Const => PriceMode::Ar1,
        }
    }

    pub fn step_kind(self) -> StepKind {
        match self {
            Scenario::IidDec | Scenario::Ar1Dec => StepKind::Decreasing,
            Scenario::IidConst | Scenario::Ar1Const => StepKind::Constant,
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerConfig {
    pub step_f: StepSchedule,
    pub step_p: StepSchedule,
    pub kappa: usize,
    pub lambda_bar: f64,
    pub mode: ControllerMode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub model: Model,
    pub mdp: MdpConfig,
    pub controller: ControllerConfig,
    pub horizon_updates: usize,
    pub seed: u64,
    pub replicas: usize,
    pub tau_max: u64,
    pub lattice_size: usize,
}

/// State after one regime decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub update_index: u64,
    /// Blocks elapsed at the end of the batch.
    pub block_index: u64,
    /// Regime and fee chosen for the next batch.
    pub delta: u8,
    pub g: f64,
    pub f_last: f64,
    pub p_last: f64,
    /// Mean per-posting X and Y of the batch just observed.
    pub x_obs: f64,
    pub y_obs: f64,
    /// Blocks in the batch.
    pub tau: u64,
    pub i: u64,
    pub j: u64,
    pub i_frac: f64,
    pub j_frac: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub replica: usize,
    pub final_f: f64,
    pub final_p: f64,
    pub i_frac: f64,
    pub j_frac: f64,
    /// Time-average queue after posting, per block.
    pub mean_queue: f64,
    pub total_compensation: f64,
    pub blocks: u64,
    pub arrivals: u64,
    pub posted: u64,
    pub final_queue: u64,
    pub delay_blocks: u64,
    pub forced_closes: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.mdp.validate()?;
        crate::error::ensure(self.horizon_updates >= 1 && self.replicas >= 1 && self.controller.kappa >= 1, || {
            "horizon_updates, replicas and kappa must be >= 1".into()
        })?;
        crate::error::ensure(self.lattice_size >= 2 && self.tau_max >= 1, || "lattice_size >= 2, tau_max >= 1".into())
    }

    pub fn bounds(&self) -> FeeBounds {
        FeeBounds::for_demand(&self.model.demand)
    }

    pub fn lattice(&self) -> FeeLattice {
        let b = self.bounds();
        FeeLattice { lo: b.lo, hi: b.hi, size: self.lattice_size }
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<Trajectory>> {
    let cache = PolicyCache::new(config.model, config.mdp)?;
    run_scenario_with(config, &cache)
}

/// Runs every replica in parallel against a shared policy cache built from
/// the same model and solver settings.
pub fn run_scenario_with(config: &ScenarioConfig, cache: &PolicyCache) -> Result<Vec<Trajectory>> {
    config.validate()?;
    (0..config.replicas).into_par_iter().map(|r| run_replica(config, cache, r)).collect()
}

pub fn run_replica(config: &ScenarioConfig, cache: &PolicyCache, replica: usize) -> Result<Trajectory> {
    let c = &config.controller;
    let lattice = config.lattice();
    let mut state = ControllerState::new(config.bounds(), c.kappa, c.step_f, c.step_p, c.mode)?;
    let mut world = World::new(&config.model, RngStream::new(config.seed).child(replica as u64));
    let mut records = Vec::with_capacity(config.horizon_updates);
    let mut batch = Vec::with_capacity(c.kappa);
    let mut total = PeriodStats::default();
    let mut forced = 0;
    for t in 0..config.horizon_updates {
        let g = state.g;
        let policy = cache.get(lattice.snap(g))?;
        batch.clear();
        for _ in 0..c.kappa {
            let s = run_posting_period(&mut world, g, &policy, cache.grid(), c.lambda_bar, config.tau_max);
            forced += s.forced_close as u64;
            batch.push(s);
        }
        let tau: u64 = batch.iter().map(|s| s.tau).sum();
        for s in &batch {
            total.tau += s.tau;
            total.arrivals += s.arrivals;
            total.posted += s.posted;
            total.delay_blocks += s.delay_blocks;
        }
        let d = select_next(&mut state, &batch)?;
        let n = state.decisions() as f64;
        records.push(Record {
            update_index: t as u64 + 1,
            block_index: total.tau,
            delta: d.delta_next.flag(),
            g: d.fee_next,
            f_last: state.f_last,
            p_last: state.p_last,
            x_obs: d.x_obs,
            y_obs: d.y_obs,
            tau,
            i: state.i,
            j: state.j,
            i_frac: state.i as f64 / n,
            j_frac: state.j as f64 / n,
        });
    }
    let last = records.last().copied().expect("horizon_updates >= 1");
    Ok(Trajectory {
        summary: Summary {
            replica,
            final_f: last.f_last,
            final_p: last.p_last,
            i_frac: last.i_frac,
            j_frac: last.j_frac,
            mean_queue: total.delay_blocks as f64 / total.tau as f64,
            total_compensation: crate::cost::compensation_owed(total.delay_blocks, &config.model.cost),
            blocks: total.tau,
            arrivals: total.arrivals,
            posted: total.posted,
            final_queue: world.queue(),
            delay_blocks: total.delay_blocks,
            forced_closes: forced,
        },
        records,
    })
}
