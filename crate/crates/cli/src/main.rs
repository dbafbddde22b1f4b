use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use l2lab::config::{Config, ConfigFile};
use l2lab::controller::ControllerMode;
use l2lab::fees::{
    check_existence_condition, congestion_fee_closed_form, find_budget_balance_fee, pnl_curve, stationary_split,
    FeeBounds, McConfig, EXISTENCE_CONDITION,
};
use l2lab::io::artifacts;
use l2lab::mdp::{build_price_grid, extract_thresholds, solve};
use l2lab::process::RngStream;
use l2lab::sim::{estimate_switch_matrix, kappa_sweep, run_scenario_with, PolicyCache, Scenario};
use l2lab::verify::{format_result, Suite, CRITERIA};

#[derive(Parser, Debug)]
#[command(name = "l2lab", version, about = "Rollup batch-posting and fee-control simulator")]
struct Cli {
    /// TOML config; missing keys take calibrated defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Reduced-scale runs.
    #[arg(long, global = true)]
    quick: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the posting MDP at one fee.
    Solve {
        #[arg(long)]
        fee: f64,
    },
    /// Budget-balance and congestion fees, and the pnl curve.
    Fees,
    /// Run a closed-loop scenario: iid-dec, iid-const, ar1-dec or ar1-const.
    Simulate {
        scenario: String,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Minority regime share against batch size at frozen target fees.
    KappaSweep {
        #[arg(long, value_delimiter = ',', default_value = "1,4,16,64")]
        kappas: Vec<usize>,
        #[arg(long)]
        batches: Option<usize>,
    },
    /// Run the acceptance criteria; exit 0 only if all pass.
    Verify {
        /// Subset of criteria, e.g. `1,5,12`.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
    },
}

fn load(cli: &Cli) -> Result<(Config, ConfigFile)> {
    let file = match &cli.config {
        Some(p) => ConfigFile::from_path(p)?,
        None => ConfigFile::default(),
    };
    let mut cfg = Config::resolve(file.clone())
        .with_context(|| cli.config.as_ref().map_or("defaults".into(), |p| p.display().to_string()))?;
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    if cli.quick {
        cfg.sim.mc_blocks = cfg.sim.mc_blocks.min(200_000);
        cfg.sim.switch_batches = cfg.sim.switch_batches.min(5_000);
    }
    Ok((cfg, file))
}

fn prepare_out(dir: &Path, cfg: &Config) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

fn mc(cfg: &Config, id: u64) -> McConfig {
    McConfig { fee_tol: cfg.sim.fee_tol, ..McConfig::new(cfg.sim.mc_blocks, RngStream::new(cfg.sim.seed).child(id)) }
}

fn cmd_solve(cfg: &Config, out: &Path, fee: f64) -> Result<()> {
    prepare_out(out, cfg)?;
    let start = Instant::now();
    let grid = build_price_grid(&cfg.price, &cfg.mdp)?;
    let sol = solve(&grid, &cfg.demand, fee, &cfg.cost, &cfg.mdp)?;
    let secs = start.elapsed().as_secs_f64();
    let thresholds = extract_thresholds(&sol)?;
    artifacts::write_solution(&out.join("solution.csv"), &sol, &grid)?;
    artifacts::write_thresholds(&out.join("thresholds.csv"), &thresholds, &grid)?;
    println!(
        "solved q_max={} n_price={} fee={fee:e}: {} rounds, {} sweeps, residual {:.3e}, {secs:.3} s",
        sol.q_max, sol.n_price, sol.rounds, sol.sweeps, sol.residual
    );
    println!("thresholds: min {} max {}", thresholds.iter().min().unwrap(), thresholds.iter().max().unwrap());
    Ok(())
}

fn cmd_fees(cfg: &Config, out: &Path) -> Result<()> {
    let p_star = congestion_fee_closed_form(&cfg.demand, cfg.controller.lambda_bar)?;
    let ex = check_existence_condition(&cfg.demand, &cfg.cost, cfg.price.mu);
    println!("existence margin: {:.5e}", ex.margin);
    if !ex.holds {
        bail!("{EXISTENCE_CONDITION} violated (margin {:.5e})", ex.margin);
    }
    prepare_out(out, cfg)?;
    let cache = PolicyCache::new(cfg.model(), cfg.mdp)?;
    let bb = find_budget_balance_fee(&cache, &mc(cfg, 1))?;
    println!("f* = {:.5e}  (pnl {:.3e} +- {:.3e}, {} probes)", bb.fee, bb.estimate.pnl, bb.estimate.std_err, bb.probes.len());
    println!("p* = {p_star:.4e}");
    println!("max(f*, p*) = {:.5e}", bb.fee.max(p_star));
    let b = FeeBounds::for_demand(&cfg.demand);
    let fees: Vec<f64> = (0..=10).map(|i| b.lo + (b.hi - b.lo) * i as f64 / 10.0).collect();
    let curve = pnl_curve(&fees, &cache, cfg.sim.mc_blocks, RngStream::new(cfg.sim.seed).child(2))?;
    artifacts::write_pnl_curve(&out.join("pnl_curve.csv"), &curve)?;
    Ok(())
}

fn cmd_simulate(
    cfg: &Config,
    file: &ConfigFile,
    out: &Path,
    name: &str,
    replicas: Option<usize>,
    horizon: Option<usize>,
    quick: bool,
) -> Result<()> {
    let scenario: Scenario = name.parse()?;
    let mut cfg = cfg.for_scenario(file, scenario);
    if quick {
        cfg.sim.horizon_updates = cfg.sim.horizon_updates.min(5_000);
        cfg.sim.replicas = cfg.sim.replicas.min(3);
    }
    if let Some(r) = replicas {
        cfg.sim.replicas = r;
    }
    if let Some(h) = horizon {
        cfg.sim.horizon_updates = h;
    }
    cfg.validate()?;
    prepare_out(out, &cfg)?;
    let cache = PolicyCache::new(cfg.model(), cfg.mdp)?;
    let p_star = congestion_fee_closed_form(&cfg.demand, cfg.controller.lambda_bar)?;
    let f_star = find_budget_balance_fee(&cache, &mc(&cfg, 1))?.fee;

    let start = Instant::now();
    let runs = run_scenario_with(&cfg.scenario_config(ControllerMode::Adaptive)?, &cache)?;
    for t in &runs {
        artifacts::write_trajectory(&out.join(format!("trajectory_r{}.csv", t.summary.replica)), t)?;
    }
    artifacts::write_summary(&out.join("summary.csv"), &runs)?;
    let kappa = cfg.controller.kappa;
    let n = cfg.sim.switch_batches;
    let est = estimate_switch_matrix(
        &cache,
        f_star,
        p_star,
        n,
        kappa,
        cfg.controller.lambda_bar,
        cfg.sim.tau_max,
        RngStream::new(cfg.sim.seed).child(3),
    )?;
    let pi = stationary_split(&est.matrix).unwrap_or((f64::NAN, f64::NAN));
    artifacts::write_switch_matrix(&out.join("switch_matrix.csv"), kappa, f_star, p_star, &est.matrix, pi, n)?;
    let histograms = scenario.step_kind() == l2lab::controller::StepKind::Constant;
    let plots = artifacts::write_scenario_plots(out, &runs[0], f_star, p_star, histograms)?;

    println!("{} | f* = {f_star:.5e}  p* = {p_star:.5e}  pi_f = {:.4}", scenario.name(), pi.0);
    println!("replica  final_f      final_p      i/t     blocks");
    for t in &runs {
        let s = &t.summary;
        println!("{:>7}  {:.5e}  {:.5e}  {:.4}  {}", s.replica, s.final_f, s.final_p, s.i_frac, s.blocks);
    }
    println!("{} replicas x {} updates in {:.2} s; plots: {}", runs.len(), cfg.sim.horizon_updates, start.elapsed().as_secs_f64(), plots.join(" "));
    Ok(())
}

fn cmd_kappa_sweep(cfg: &Config, out: &Path, kappas: &[usize], batches: Option<usize>, quick: bool) -> Result<()> {
    prepare_out(out, cfg)?;
    let cache = PolicyCache::new(cfg.model(), cfg.mdp)?;
    let p_star = congestion_fee_closed_form(&cfg.demand, cfg.controller.lambda_bar)?;
    let f_star = find_budget_balance_fee(&cache, &mc(cfg, 1))?.fee;
    let n = batches.unwrap_or(if quick { 10_000 } else { 100_000 });
    let rows = kappa_sweep(
        &cache,
        f_star,
        p_star,
        cfg.sim.fee_tol,
        kappas,
        n,
        cfg.controller.lambda_bar,
        cfg.sim.tau_max,
        RngStream::new(cfg.sim.seed).child(4),
    )?;
    artifacts::write_kappa_sweep(&out.join("kappa_sweep.csv"), &rows)?;
    println!("f* = {f_star:.5e}  p* = {p_star:.5e}  batches = {n}");
    println!("kappa  p01        p10        minority");
    for r in &rows {
        println!("{:>5}  {:.4e}  {:.4e}  {:.4e}", r.kappa, r.p01, r.p10, r.minority);
    }
    Ok(())
}

fn cmd_verify(cfg: &Config, out: &Path, quick: bool, only: &[usize]) -> Result<bool> {
    let suite = Suite::new(*cfg, quick);
    let ids: Vec<usize> = if only.is_empty() { (1..=CRITERIA).collect() } else { only.to_vec() };
    let mut results = Vec::new();
    for id in ids {
        let r = suite.criterion(id);
        println!("{}", format_result(&r));
        results.push(r);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    suite.write_artifacts(out, &results)?;
    Ok(failed == 0)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("L2LAB_THREADS") {
        let n: usize = v.parse().with_context(|| format!("L2LAB_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    init_threads()?;
    let (cfg, file) = load(cli)?;
    match &cli.command {
        Command::Solve { fee } => cmd_solve(&cfg, &cli.out, *fee)?,
        Command::Fees => cmd_fees(&cfg, &cli.out)?,
        Command::Simulate { scenario, replicas, horizon } => {
            cmd_simulate(&cfg, &file, &cli.out, scenario, *replicas, *horizon, cli.quick)?
        }
        Command::KappaSweep { kappas, batches } => cmd_kappa_sweep(&cfg, &cli.out, kappas, *batches, cli.quick)?,
        Command::Verify { criteria } => return cmd_verify(&cfg, &cli.out, cli.quick, criteria),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
