use l2lab::process::{
    arrival_rate, poisson_pmf, sample_price_iid, stationary_std, step_price_ar1, DemandModel, PoissonSampler,
    PriceMode, PriceModel, PricePath, PriceState, RngStream, Role,
};
use proptest::prelude::*;

fn path(mode: PriceMode, seed: u64) -> PricePath {
    let m = PriceModel::calibrated(mode);
    PricePath::new(m, m.mu, RngStream::new(seed).role(Role::Price).rng())
}

#[test]
fn price_paths_are_reproducible_per_stream() {
    for mode in [PriceMode::Ar1, PriceMode::Iid] {
        let (mut a, mut b, mut c) = (path(mode, 5), path(mode, 5), path(mode, 6));
        let xs: Vec<f64> = (0..1000).map(|_| a.advance()).collect();
        let ys: Vec<f64> = (0..1000).map(|_| b.advance()).collect();
        let zs: Vec<f64> = (0..1000).map(|_| c.advance()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }
}

#[test]
fn ar1_stationary_spread_matches_simulation() {
    // calibrated band is only ~2 stationary sds wide; shrink sigma so the clamp stays idle
    let m = PriceModel { sigma: 2e-9, ..PriceModel::calibrated(PriceMode::Ar1) };
    let mut p = PricePath::new(m, m.mu, RngStream::new(11).role(Role::Price).rng());
    let n = 1_000_000;
    let xs: Vec<f64> = (0..n).map(|_| p.advance()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    // lag-one correlation 0.9 inflates the error of the mean about 4.4x
    assert!((mean / m.mu - 1.0).abs() < 0.01, "mean {mean}");
    assert!((sd / stationary_std(&m).unwrap() - 1.0).abs() < 0.03, "sd {sd}");
    let lag1 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1) as f64 / sd.powi(2);
    assert!((lag1 - (1.0 - m.theta)).abs() < 0.01, "lag1 {lag1}");
}

#[test]
fn wrong_mode_is_rejected() {
    let iid = PriceModel::calibrated(PriceMode::Iid);
    let ar1 = PriceModel::calibrated(PriceMode::Ar1);
    assert!(step_price_ar1(PriceState { p: iid.mu }, &iid, 0.0).is_err());
    assert!(sample_price_iid(&ar1, &mut RngStream::new(1).rng()).is_err());
    assert!(stationary_std(&iid).is_err());
    assert!(stationary_std(&PriceModel { theta: 0.0, ..ar1 }).is_err());
}

#[test]
fn poisson_pmf_matches_recursion() {
    // independent oracle: p(n) = p(n-1) * rate / n from exp(-rate)
    for rate in [0.5, 7.0, 60.0, 180.0] {
        let pmf = poisson_pmf(rate, 0);
        let mut p = (-rate).exp();
        for (n, &got) in pmf.iter().enumerate().take(400) {
            if n > 0 {
                p *= rate / n as f64;
            }
            assert!((got - p).abs() <= 1e-12 * p.max(1e-300) + 1e-300, "rate {rate} n {n}: {got} vs {p}");
        }
    }
}

proptest! {
    #[test]
    fn arrivals_fall_with_fee(f1 in 0.0..2e-4f64, f2 in 0.0..2e-4f64) {
        let d = DemandModel::calibrated();
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        prop_assert!(arrival_rate(&d, lo).unwrap() >= arrival_rate(&d, hi).unwrap());
        prop_assert!(arrival_rate(&d, hi).unwrap() >= 0.0);
        if hi >= d.choke_fee() {
            prop_assert_eq!(arrival_rate(&d, hi).unwrap(), 0.0);
        }
    }

    #[test]
    fn poisson_draws_couple_monotonically(u in 0.0..1.0f64, r1 in 0.0..200.0f64, r2 in 0.0..200.0f64) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(PoissonSampler::new(lo).quantile(u) <= PoissonSampler::new(hi).quantile(u));
    }

    #[test]
    fn ar1_step_stays_in_band(p in 1e-10..1e-7f64, omega in -50.0..50.0f64) {
        let m = PriceModel::calibrated(PriceMode::Ar1);
        let next = step_price_ar1(PriceState { p }, &m, omega).unwrap().p;
        prop_assert!(next >= m.floor && next <= m.cap());
        if omega == 0.0 {
            let clamped = m.clamp(p);
            prop_assert!((next - m.mu).abs() <= (clamped - m.mu).abs() + 1e-24);
        }
    }

    #[test]
    fn iid_draws_stay_in_band(seed in any::<u64>()) {
        let m = PriceModel::calibrated(PriceMode::Iid);
        let mut rng = RngStream::new(seed).rng();
        for _ in 0..100 {
            let p = sample_price_iid(&m, &mut rng).unwrap().p;
            prop_assert!(p >= m.floor && p <= m.cap());
        }
    }
}
