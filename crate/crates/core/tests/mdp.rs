use l2lab::cost::CostParams;
use l2lab::fees::congestion_fee_closed_form;
use l2lab::mdp::{
    bellman_backup_full, build_price_grid, extract_thresholds, solve, Action, Boundary, MdpConfig, MdpSolution,
    PriceGrid,
};
use l2lab::process::{DemandModel, PriceMode, PriceModel};
use proptest::prelude::*;

fn setup(mode: PriceMode, config: &MdpConfig) -> (PriceGrid, DemandModel) {
    (build_price_grid(&PriceModel::calibrated(mode), config).unwrap(), DemandModel::calibrated())
}

fn p_star() -> f64 {
    congestion_fee_closed_form(&DemandModel::calibrated(), 120.0).unwrap()
}

fn assert_matches_oracle(sol: &MdpSolution, grid: &PriceGrid, d: &DemandModel, fee: f64, cost: &CostParams) {
    for q in 0..=sol.q_max {
        for i in 0..grid.len() {
            let (s, v) = bellman_backup_full(sol, q, i, grid, d, fee, cost);
            assert!(s == 0 || s == q, "non-binary argmin s={s} at q={q} i={i}");
            let expect = if sol.action(q, i) == Action::Hold { 0 } else { q };
            assert_eq!(s, expect, "argmin disagrees with policy at q={q} i={i}");
            let rel = (v - sol.value(q, i)).abs() / sol.value(q, i).abs().max(1e-300);
            assert!(rel <= 1e-9, "value mismatch {rel:e} at q={q} i={i}");
        }
    }
}

#[test]
fn small_instance_matches_full_action_oracle() {
    let config = MdpConfig::small();
    let cost = CostParams::default();
    for mode in [PriceMode::Ar1, PriceMode::Iid] {
        let (grid, d) = setup(mode, &config);
        for fee in [p_star(), 1.0e-4, 0.0] {
            let sol = solve(&grid, &d, fee, &cost, &config).unwrap();
            assert_matches_oracle(&sol, &grid, &d, fee, &cost);
            assert!(sol.residual <= 10.0 * config.tol, "residual {:e}", sol.residual);
        }
    }
}

#[test]
fn lumped_boundary_matches_its_oracle() {
    let config = MdpConfig { boundary: Boundary::Lump, ..MdpConfig::small() };
    let cost = CostParams::default();
    let (grid, d) = setup(PriceMode::Ar1, &config);
    let sol = solve(&grid, &d, p_star(), &cost, &config).unwrap();
    for q in 0..=sol.q_max {
        for i in 0..grid.len() {
            let (_, v) = bellman_backup_full(&sol, q, i, &grid, &d, p_star(), &cost);
            assert!((v - sol.value(q, i)).abs() <= 1e-9 * sol.value(q, i).abs());
        }
    }
}

#[test]
fn free_waiting_never_posts() {
    let config = MdpConfig { boundary: Boundary::Lump, ..MdpConfig::small() };
    let cost = CostParams { a: 0.0, ..CostParams::default() };
    let (grid, d) = setup(PriceMode::Ar1, &config);
    let sol = solve(&grid, &d, p_star(), &cost, &config).unwrap();
    assert!(extract_thresholds(&sol).unwrap().iter().all(|&t| t == config.q_max));
}

#[test]
fn free_posting_always_posts() {
    let config = MdpConfig::small();
    let cost = CostParams { b0: 0.0, b1: 0.0, ..CostParams::default() };
    let (grid, d) = setup(PriceMode::Ar1, &config);
    let sol = solve(&grid, &d, p_star(), &cost, &config).unwrap();
    assert!(extract_thresholds(&sol).unwrap().iter().all(|&t| t == 0));
    assert_eq!(sol.action(0, 3), Action::Hold);
}

#[test]
fn default_thresholds_depend_on_price() {
    let config = MdpConfig::default();
    let (grid, d) = setup(PriceMode::Ar1, &config);
    let sol = solve(&grid, &d, p_star(), &CostParams::default(), &config).unwrap();
    let t = extract_thresholds(&sol).unwrap();
    assert!(t.windows(2).all(|w| w[0] <= w[1]), "thresholds should rise with price: {t:?}");
    assert!(t[0] < *t.last().unwrap());
    assert!(*t.last().unwrap() < config.q_max);
}

fn check_structure(sol: &MdpSolution) {
    let n = sol.n_price;
    for i in 0..n {
        for q in 0..sol.q_max {
            assert!(sol.value(q + 1, i) >= sol.value(q, i) - 1e-12, "value decreasing at q={q} i={i}");
        }
        for q in 0..sol.q_max.saturating_sub(1) {
            let (a, b, c) = (sol.value(q, i), sol.value(q + 1, i), sol.value(q + 2, i));
            assert!(2.0 * b >= a + c - 1e-8 * (1.0 + a.abs()), "concavity fails at q={q} i={i}");
        }
    }
    extract_thresholds(sol).unwrap();
}

#[test]
fn value_is_monotone_and_concave() {
    let config = MdpConfig::small();
    for mode in [PriceMode::Ar1, PriceMode::Iid] {
        let (grid, d) = setup(mode, &config);
        let sol = solve(&grid, &d, p_star(), &CostParams::default(), &config).unwrap();
        check_structure(&sol);
    }
}

#[test]
fn grid_refinement_converges() {
    let d = DemandModel::calibrated();
    let cost = CostParams::default();
    let mu = 3.86e-8;
    let at_mean = |n: usize| {
        let config = MdpConfig { n_price: n, ..MdpConfig::small() };
        let grid = build_price_grid(&PriceModel::calibrated(PriceMode::Ar1), &config).unwrap();
        let sol = solve(&grid, &d, p_star(), &cost, &config).unwrap();
        sol.value(0, grid.nearest_index(mu))
    };
    let (a, b, c) = (at_mean(21), at_mean(41), at_mean(81));
    assert!((c - b).abs() <= (b - a).abs() + 1e-12 * c.abs(), "{a} {b} {c}");
    assert!((c - b).abs() / c < 1e-3);
}

#[test]
fn warm_start_reproduces_cold_solve() {
    let config = MdpConfig::default();
    let (grid, d) = setup(PriceMode::Iid, &config);
    let cost = CostParams::default();
    let near = solve(&grid, &d, 3.0e-5, &cost, &config).unwrap();
    let cold = solve(&grid, &d, p_star(), &cost, &config).unwrap();
    let warm = l2lab::mdp::solve_from(&grid, &d, p_star(), &cost, &config, Some(&near)).unwrap();
    assert_eq!(extract_thresholds(&cold).unwrap(), extract_thresholds(&warm).unwrap());
    for q in [0, 1, 5, 100, 200] {
        for i in [0, 50, 100] {
            assert!((cold.value(q, i) - warm.value(q, i)).abs() < 1e-12);
        }
    }
}

#[test]
fn solver_rejects_bad_config() {
    let (grid, d) = setup(PriceMode::Ar1, &MdpConfig::small());
    let bad = MdpConfig { tol: 0.0, ..MdpConfig::small() };
    assert!(solve(&grid, &d, 1e-5, &CostParams::default(), &bad).is_err());
    assert!(solve(&grid, &d, -1e-5, &CostParams::default(), &MdpConfig::small()).is_err());
    let capped = MdpConfig { max_iters: 1, ..MdpConfig::small() };
    assert!(matches!(
        solve(&grid, &d, 1e-5, &CostParams::default(), &capped),
        Err(l2lab::Error::NonConvergence(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solved_policies_have_threshold_form(
        a in 2e-5f64..2e-4,
        b0 in 0.0f64..20_000.0,
        b1 in 50.0f64..800.0,
        fee in 0.0f64..5.3e-5,
        iid in any::<bool>(),
    ) {
        let config = MdpConfig { q_max: 40, n_price: 15, ..MdpConfig::default() };
        let mode = if iid { PriceMode::Iid } else { PriceMode::Ar1 };
        let (grid, d) = setup(mode, &config);
        let cost = CostParams { a, b0, b1, gamma: 0.95 };
        let sol = solve(&grid, &d, fee, &cost, &config).unwrap();
        check_structure(&sol);
        prop_assert!(sol.residual <= 10.0 * config.tol);
        for i in 0..grid.len() {
            for q in 0..=config.q_max {
                prop_assert_eq!(sol.action(q, i) == Action::PostAll, sol.posts(q as u64, i));
            }
        }
    }
}
