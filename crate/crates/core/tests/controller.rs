use l2lab::controller::{
    project, select_next, step_size, ControllerMode, ControllerState, PeriodStats, Regime, StepKind, StepSchedule,
};
use l2lab::error::Error;
use l2lab::fees::FeeBounds;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bounds() -> FeeBounds {
    FeeBounds { lo: 0.0, hi: 180.0 / (2.0 * 1.67e6) }
}

fn controller(kind: StepKind, mode: ControllerMode, kappa: usize) -> ControllerState {
    let f = StepSchedule::new(kind, 1e-3).unwrap();
    let p = StepSchedule::new(kind, 1e-7).unwrap();
    ControllerState::new(bounds(), kappa, f, p, mode).unwrap()
}

fn period(x: f64, y: f64) -> PeriodStats {
    PeriodStats { x, y, tau: 1, ..Default::default() }
}

/// Literal history-scanning reading of the selection rule for kappa = 1:
/// the budget rule always uses the X of the most recent budget-regime
/// period and the fee that rule last produced, and likewise for congestion.
fn reference(obs: &[(f64, f64)], kind: StepKind) -> Vec<(Regime, f64)> {
    let b = bounds();
    let g0 = 0.5 * (b.lo + b.hi);
    let (sf, sp) = (StepSchedule::new(kind, 1e-3).unwrap(), StepSchedule::new(kind, 1e-7).unwrap());
    let mut hist: Vec<(Regime, f64, f64, f64)> = Vec::new(); // regime, fee, x, y
    let (mut regime, mut fee) = (Regime::Budget, g0);
    let mut out = Vec::new();
    for &(x, y) in obs {
        hist.push((regime, fee, x, y));
        let last = |r: Regime| hist.iter().rev().find(|h| h.0 == r).copied();
        let next = match regime {
            Regime::Budget if y < 0.0 => Regime::Congestion,
            Regime::Congestion if x < 0.0 => Regime::Budget,
            r => r,
        };
        let n_budget = out.iter().filter(|o: &&(Regime, f64)| o.0 == Regime::Budget).count() as u64;
        let n_cong = out.len() as u64 - n_budget;
        fee = match next {
            Regime::Budget => {
                let (zeta, prev) = last(Regime::Budget).map_or((0.0, g0), |h| (h.2, h.1));
                project(prev - step_size(&sf, n_budget) * zeta, &b)
            }
            Regime::Congestion => {
                let (eta, prev) = last(Regime::Congestion).map_or((0.0, g0), |h| (h.3, h.1));
                project(prev - step_size(&sp, n_cong) * eta, &b)
            }
        };
        regime = next;
        out.push((regime, fee));
    }
    out
}

proptest! {
    #[test]
    fn matches_history_reference(seed in any::<u64>(), n in 1usize..300, decreasing in any::<bool>()) {
        let kind = if decreasing { StepKind::Decreasing } else { StepKind::Constant };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(-5e-3..5e-3), rng.random_range(-60.0..60.0))).collect();
        let expect = reference(&obs, kind);
        let mut s = controller(kind, ControllerMode::Adaptive, 1);
        for (k, &(x, y)) in obs.iter().enumerate() {
            let d = select_next(&mut s, &[period(x, y)]).unwrap();
            prop_assert_eq!(d.delta_next, expect[k].0);
            prop_assert_eq!(d.fee_next.to_bits(), expect[k].1.to_bits());
        }
    }

    #[test]
    fn fees_stay_confined(seed in any::<u64>(), kappa in 1usize..5, scale in 1e-6..1e3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = controller(StepKind::Constant, ControllerMode::Adaptive, kappa);
        for t in 1..=200u64 {
            let batch: Vec<_> = (0..kappa).map(|_| period(rng.random_range(-scale..scale), rng.random_range(-scale..scale))).collect();
            let d = select_next(&mut s, &batch).unwrap();
            prop_assert!(bounds().contains(d.fee_next));
            prop_assert!(bounds().contains(s.f_last) && bounds().contains(s.p_last));
            prop_assert_eq!(s.i + s.j, t);
        }
    }
}

#[test]
fn batch_size_is_enforced() {
    let mut s = controller(StepKind::Constant, ControllerMode::Adaptive, 3);
    assert!(matches!(select_next(&mut s, &[period(0.0, 0.0)]), Err(Error::BatchSize { got: 1, kappa: 3 })));
}

#[test]
fn single_rule_modes_never_switch() {
    for (mode, regime) in [(ControllerMode::CongestionOnly, Regime::Congestion), (ControllerMode::BudgetOnly, Regime::Budget)] {
        let mut s = controller(StepKind::Decreasing, mode, 1);
        for k in 0..100 {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(select_next(&mut s, &[period(sign, sign)]).unwrap().delta_next, regime);
        }
    }
}

#[test]
fn budget_rule_settles_on_root() {
    // X responds linearly to the fee around a known root, plus noise
    let root = 1.9562e-5;
    let mut s = controller(StepKind::Decreasing, ControllerMode::BudgetOnly, 1);
    s.step_f = StepSchedule::new(StepKind::Decreasing, 2e-2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20_000 {
        let x = 150.0 * (s.g - root) + rng.random_range(-1e-3..1e-3);
        select_next(&mut s, &[period(x, 0.0)]).unwrap();
    }
    assert!((s.f_last / root - 1.0).abs() < 0.02, "{}", s.f_last);
    // at the root with zero observations the fee does not move
    let mut s = controller(StepKind::Constant, ControllerMode::BudgetOnly, 1);
    let g0 = s.g;
    for _ in 0..10 {
        select_next(&mut s, &[period(0.0, 0.0)]).unwrap();
    }
    assert_eq!(s.f_last, g0);
}
