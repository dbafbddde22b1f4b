//! TOML configuration: six sections, every key optional, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerMode, StepKind, StepSchedule};
use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::mdp::{Boundary, MdpConfig};
use crate::process::{DemandModel, PriceMode, PriceModel};
use crate::sim::{ControllerConfig, FeeLattice, Model, Scenario, ScenarioConfig, TAU_MAX};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSection {
    pub mode: Option<PriceMode>,
    pub mu: Option<f64>,
    pub theta: Option<f64>,
    pub sigma: Option<f64>,
    pub iid_std: Option<f64>,
    pub floor: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSection {
    pub lambda0: Option<f64>,
    pub k: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub a: Option<f64>,
    pub b0: Option<f64>,
    pub b1: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSection {
    pub q_max: Option<usize>,
    pub n_price: Option<usize>,
    pub grid_width_sds: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub boundary: Option<Boundary>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub step_kind: Option<StepKind>,
    pub step_f: Option<f64>,
    pub step_p: Option<f64>,
    pub kappa: Option<usize>,
    pub lambda_bar: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon_updates: Option<usize>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub tau_max: Option<u64>,
    pub lattice_size: Option<usize>,
    /// Blocks per fee-oracle probe.
    pub mc_blocks: Option<usize>,
    pub fee_tol: Option<f64>,
    /// Batches per fee when estimating the regime switch matrix.
    pub switch_batches: Option<usize>,
}

/// The file as written, before defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub price: PriceSection,
    #[serde(default)]
    pub demand: DemandSection,
    #[serde(default)]
    pub cost: CostSection,
    #[serde(default)]
    pub mdp: MdpSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub sim: SimSection,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerSettings {
    pub step_kind: StepKind,
    pub step_f: f64,
    pub step_p: f64,
    pub kappa: usize,
    pub lambda_bar: f64,
}

/// Step bases by schedule. Decreasing steps need base * slope > 1/2 for the
/// 1/sqrt(n) rate, where the slopes of E[X] and E[Y] in the fee are about
/// 150 and k = 1.67e6; constant steps trade bias for tracking.
pub fn default_steps(kind: StepKind) -> (f64, f64) {
    match kind {
        StepKind::Decreasing => (1e-2, 1e-6),
        StepKind::Constant => (5e-5, 1e-8),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimSettings {
    pub horizon_updates: usize,
    pub seed: u64,
    pub replicas: usize,
    pub tau_max: u64,
    pub lattice_size: usize,
    pub mc_blocks: usize,
    pub fee_tol: f64,
    pub switch_batches: usize,
}

/// Fully resolved configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Config {
    pub price: PriceModel,
    pub demand: DemandModel,
    pub cost: CostParams,
    pub mdp: MdpConfig,
    pub controller: ControllerSettings,
    pub sim: SimSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self::resolve(ConfigFile::default()).expect("defaults are valid")
    }
}

impl Config {
    pub fn resolve(file: ConfigFile) -> Result<Self> {
        let base = PriceModel::calibrated(file.price.mode.unwrap_or(PriceMode::Ar1));
        let mu = file.price.mu.unwrap_or(base.mu);
        let price = PriceModel {
            mode: base.mode,
            mu,
            theta: file.price.theta.unwrap_or(base.theta),
            sigma: file.price.sigma.unwrap_or(base.sigma),
            iid_std: file.price.iid_std.unwrap_or(base.iid_std),
            floor: file.price.floor.unwrap_or(mu / 100.0),
        };
        let d = DemandModel::calibrated();
        let demand = DemandModel { lambda0: file.demand.lambda0.unwrap_or(d.lambda0), k: file.demand.k.unwrap_or(d.k) };
        let c = CostParams::default();
        let cost = CostParams {
            a: file.cost.a.unwrap_or(c.a),
            b0: file.cost.b0.unwrap_or(c.b0),
            b1: file.cost.b1.unwrap_or(c.b1),
            gamma: file.cost.gamma.unwrap_or(c.gamma),
        };
        let m = MdpConfig::default();
        let mdp = MdpConfig {
            q_max: file.mdp.q_max.unwrap_or(m.q_max),
            n_price: file.mdp.n_price.unwrap_or(m.n_price),
            grid_width_sds: file.mdp.grid_width_sds.unwrap_or(m.grid_width_sds),
            tol: file.mdp.tol.unwrap_or(m.tol),
            max_iters: file.mdp.max_iters.unwrap_or(m.max_iters),
            boundary: file.mdp.boundary.unwrap_or(m.boundary),
        };
        let step_kind = file.controller.step_kind.unwrap_or(StepKind::Decreasing);
        let (sf, sp) = default_steps(step_kind);
        let controller = ControllerSettings {
            step_kind,
            step_f: file.controller.step_f.unwrap_or(sf),
            step_p: file.controller.step_p.unwrap_or(sp),
            kappa: file.controller.kappa.unwrap_or(1),
            lambda_bar: file.controller.lambda_bar.unwrap_or(120.0),
        };
        let sim = SimSettings {
            horizon_updates: file.sim.horizon_updates.unwrap_or(50_000),
            seed: file.sim.seed.unwrap_or(20_240_601),
            replicas: file.sim.replicas.unwrap_or(10),
            tau_max: file.sim.tau_max.unwrap_or(TAU_MAX),
            lattice_size: file.sim.lattice_size.unwrap_or(FeeLattice::DEFAULT_SIZE),
            mc_blocks: file.sim.mc_blocks.unwrap_or(1_000_000),
            fee_tol: file.sim.fee_tol.unwrap_or(1e-8),
            switch_batches: file.sim.switch_batches.unwrap_or(20_000),
        };
        let cfg = Self { price, demand, cost, mdp, controller, sim };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.price.validate()?;
        self.demand.validate()?;
        self.cost.validate()?;
        self.mdp.validate()?;
        StepSchedule::new(self.controller.step_kind, self.controller.step_f)?;
        StepSchedule::new(self.controller.step_kind, self.controller.step_p)?;
        let s = &self.sim;
        if self.controller.kappa == 0 || s.horizon_updates == 0 || s.replicas == 0 || s.lattice_size < 2 || s.tau_max == 0 {
            return Err(Error::Config("kappa, horizon_updates, replicas, tau_max must be >= 1 and lattice_size >= 2".into()));
        }
        if s.mc_blocks < 10_000 || s.fee_tol <= 0.0 || s.switch_batches == 0 {
            return Err(Error::Config("mc_blocks >= 10000, fee_tol > 0, switch_batches >= 1 required".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::resolve(ConfigFile::from_toml_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::resolve(ConfigFile::from_path(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Every key spelled out, so the file reproduces this exact config.
    pub fn to_file(&self) -> ConfigFile {
        let p = &self.price;
        ConfigFile {
            price: PriceSection {
                mode: Some(p.mode),
                mu: Some(p.mu),
                theta: Some(p.theta),
                sigma: Some(p.sigma),
                iid_std: Some(p.iid_std),
                floor: Some(p.floor),
            },
            demand: DemandSection { lambda0: Some(self.demand.lambda0), k: Some(self.demand.k) },
            cost: CostSection { a: Some(self.cost.a), b0: Some(self.cost.b0), b1: Some(self.cost.b1), gamma: Some(self.cost.gamma) },
            mdp: MdpSection {
                q_max: Some(self.mdp.q_max),
                n_price: Some(self.mdp.n_price),
                grid_width_sds: Some(self.mdp.grid_width_sds),
                tol: Some(self.mdp.tol),
                max_iters: Some(self.mdp.max_iters),
                boundary: Some(self.mdp.boundary),
            },
            controller: ControllerSection {
                step_kind: Some(self.controller.step_kind),
                step_f: Some(self.controller.step_f),
                step_p: Some(self.controller.step_p),
                kappa: Some(self.controller.kappa),
                lambda_bar: Some(self.controller.lambda_bar),
            },
            sim: SimSection {
                horizon_updates: Some(self.sim.horizon_updates),
                seed: Some(self.sim.seed),
                replicas: Some(self.sim.replicas),
                tau_max: Some(self.sim.tau_max),
                lattice_size: Some(self.sim.lattice_size),
                mc_blocks: Some(self.sim.mc_blocks),
                fee_tol: Some(self.sim.fee_tol),
                switch_batches: Some(self.sim.switch_batches),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }

    pub fn model(&self) -> Model {
        Model { price: self.price, demand: self.demand, cost: self.cost }
    }

    /// The config a scenario runs with: its price mode and step schedule,
    /// with step bases falling back to that schedule's defaults unless the
    /// source file set them.
    pub fn for_scenario(&self, file: &ConfigFile, scenario: Scenario) -> Config {
        let mut c = *self;
        c.price.mode = scenario.price_mode();
        let kind = scenario.step_kind();
        let (sf, sp) = default_steps(kind);
        c.controller.step_kind = kind;
        c.controller.step_f = file.controller.step_f.unwrap_or(sf);
        c.controller.step_p = file.controller.step_p.unwrap_or(sp);
        c
    }

    pub fn scenario_config(&self, mode: ControllerMode) -> Result<ScenarioConfig> {
        let c = &self.controller;
        Ok(ScenarioConfig {
            model: self.model(),
            mdp: self.mdp,
            controller: ControllerConfig {
                step_f: StepSchedule::new(c.step_kind, c.step_f)?,
                step_p: StepSchedule::new(c.step_kind, c.step_p)?,
                kappa: c.kappa,
                lambda_bar: c.lambda_bar,
                mode,
            },
            horizon_updates: self.sim.horizon_updates,
            seed: self.sim.seed,
            replicas: self.sim.replicas,
            tau_max: self.sim.tau_max,
            lattice_size: self.sim.lattice_size,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        let c = Config::from_toml_str("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.price.floor, c.price.mu / 100.0);
        assert_eq!(c.mdp.q_max, 200);
        assert_eq!(c.controller.step_f, 1e-2);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_toml_str("[price]\nmu = 1e-8\nnu = 2.0\n").is_err());
        assert!(Config::from_toml_str("[pricing]\nmu = 1e-8\n").is_err());
    }

    #[test]
    fn partial_override() {
        let c = Config::from_toml_str("[cost]\na = 1e-5\n[controller]\nstep_kind = \"constant\"\n").unwrap();
        assert_eq!(c.cost.a, 1e-5);
        assert_eq!(c.cost.b0, 1000.0);
        assert_eq!((c.controller.step_f, c.controller.step_p), default_steps(StepKind::Constant));
    }

    #[test]
    fn resolved_round_trip() {
        let c = Config::from_toml_str("[price]\nmode = \"iid\"\n[sim]\nseed = 42\n").unwrap();
        let again = Config::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.to_toml(), c.to_toml());
    }

    #[test]
    fn scenario_overrides_mode_and_steps() {
        let file: ConfigFile = toml::from_str("[controller]\nstep_p = 3e-7\n").unwrap();
        let c = Config::resolve(file.clone()).unwrap().for_scenario(&file, Scenario::Ar1Const);
        assert_eq!(c.price.mode, PriceMode::Ar1);
        assert_eq!(c.controller.step_kind, StepKind::Constant);
        assert_eq!(c.controller.step_f, default_steps(StepKind::Constant).0);
        assert_eq!(c.controller.step_p, 3e-7);
    }
}
