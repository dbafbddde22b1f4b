use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand_chacha::ChaCha8Rng;

use crate::controller::PeriodStats;
use crate::cost::CostParams;
use crate::error::Result;
use crate::mdp::{build_price_grid, solve_from, MdpConfig, MdpSolution, PriceGrid};
use crate::process::{DemandModel, PoissonSampler, PriceModel, PricePath, Role, RngStream};

/// The economic primitives of one experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Model {
    pub price: PriceModel,
    pub demand: DemandModel,
    pub cost: CostParams,
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        self.price.validate()?;
        self.demand.validate()?;
        self.cost.validate()
    }
}

/// Solved policies keyed by fee, built once and shared.
pub struct PolicyCache {
    model: Model,
    config: MdpConfig,
    grid: PriceGrid,
    memo: Mutex<HashMap<u64, Arc<MdpSolution>>>,
}

impl PolicyCache {
    pub fn new(model: Model, config: MdpConfig) -> Result<Self> {
        model.validate()?;
        let grid = build_price_grid(&model.price, &config)?;
        Ok(Self { model, config, grid, memo: Mutex::new(HashMap::new()) })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &MdpConfig {
        &self.config
    }

    pub fn grid(&self) -> &PriceGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.memo.lock().expect("policy cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Solution at exactly `fee`. The lock is not held while solving; if two
    /// threads race on one fee they compute the same solution and the first
    /// stored wins.
    pub fn get(&self, fee: f64) -> Result<Arc<MdpSolution>> {
        let key = fee.to_bits();
        if let Some(s) = self.memo.lock().expect("policy cache poisoned").get(&key) {
            return Ok(Arc::clone(s));
        }
        let m = &self.model;
        let solved = Arc::new(solve_from(&self.grid, &m.demand, fee, &m.cost, &self.config, None)?);
        let mut memo = self.memo.lock().expect("policy cache poisoned");
        Ok(Arc::clone(memo.entry(key).or_insert(solved)))
    }
}

/// Uniform lattice on the fee interval used to look up policies for a
/// continuous controller fee.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeeLattice {
    pub lo: f64,
    pub hi: f64,
    pub size: usize,
}

impl FeeLattice {
    pub const DEFAULT_SIZE: usize = 256;

    pub fn point(&self, idx: usize) -> f64 {
        if idx + 1 >= self.size {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * idx as f64 / (self.size - 1) as f64
        }
    }

    pub fn snap(&self, fee: f64) -> f64 {
        let x = (fee - self.lo) / (self.hi - self.lo) * (self.size - 1) as f64;
        self.point(x.round().clamp(0.0, (self.size - 1) as f64) as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockOutcome {
    pub arrivals: u64,
    pub posted: u64,
    pub cost: f64,
    pub queue_after: u64,
    /// Price the block was decided and charged at.
    pub price: f64,
}

/// Queue, price path and arrival stream of one closed-loop run.
#[derive(Clone, Debug)]
pub struct World {
    model: Model,
    queue: u64,
    prices: PricePath,
    arrivals_rng: ChaCha8Rng,
    sampler: PoissonSampler,
    sampler_fee: f64,
}

impl World {
    /// Price starts at `mu` with an empty queue. Price and arrival draws use
    /// the stream's `Price` and `Arrivals` substreams.
    pub fn new(model: &Model, stream: RngStream) -> Self {
        Self {
            model: *model,
            queue: 0,
            prices: PricePath::new(model.price, model.price.mu, stream.role(Role::Price).rng()),
            arrivals_rng: stream.role(Role::Arrivals).rng(),
            sampler: PoissonSampler::new(model.demand.rate(0.0)),
            sampler_fee: 0.0,
        }
    }

    pub fn queue(&self) -> u64 {
        self.queue
    }

    pub fn price(&self) -> f64 {
        self.prices.price()
    }

    /// One L1 block: arrivals join, the policy decides at the current price,
    /// the stage cost is charged, then the price moves.
    #[inline]
    pub fn step(&mut self, fee: f64, policy: &MdpSolution, grid: &PriceGrid) -> BlockOutcome {
        if fee.to_bits() != self.sampler_fee.to_bits() {
            self.sampler = PoissonSampler::new(self.model.demand.rate(fee));
            self.sampler_fee = fee;
        }
        let arrivals = self.sampler.sample(&mut self.arrivals_rng);
        self.queue += arrivals;
        let price = self.prices.price();
        let posted = if policy.posts(self.queue, grid.nearest_index(price)) { self.queue } else { 0 };
        let cost = self.model.cost.stage(self.queue, posted, price);
        self.queue -= posted;
        self.prices.advance();
        BlockOutcome { arrivals, posted, cost, queue_after: self.queue, price }
    }
}

/// Blocks from an empty queue until the policy posts, or `tau_max` blocks.
pub fn run_posting_period(
    world: &mut World,
    fee: f64,
    policy: &MdpSolution,
    grid: &PriceGrid,
    lambda_bar: f64,
    tau_max: u64,
) -> PeriodStats {
    let mut stats = PeriodStats::default();
    loop {
        let out = world.step(fee, policy, grid);
        stats.add_block(out.arrivals, fee, out.cost, lambda_bar, out.queue_after);
        stats.posted += out.posted;
        if out.posted > 0 {
            break;
        }
        if stats.tau >= tau_max {
            stats.forced_close = true;
            break;
        }
    }
    stats
}
