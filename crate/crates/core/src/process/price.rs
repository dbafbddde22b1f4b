use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceMode {
    Ar1,
    Iid,
}

impl PriceMode {
    pub fn name(self) -> &'static str {
        match self {
            PriceMode::Ar1 => "ar1",
            PriceMode::Iid => "iid",
        }
    }
}

/// L1 gas price process, in ETH per gas unit.
///
/// Prices live in `[floor, 2*mu - floor]`. The band is symmetric about `mu`,
/// so clamping keeps the mean at `mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceModel {
    pub mode: PriceMode,
    pub mu: f64,
    pub theta: f64,
    pub sigma: f64,
    pub iid_std: f64,
    pub floor: f64,
}

impl PriceModel {
    /// Mainnet calibration: mean 3.86e-8, reversion 0.1, innovation std 8.41e-9,
    /// i.i.d. std 1.93e-8.
    pub fn calibrated(mode: PriceMode) -> Self {
        let mu = 3.86e-8;
        Self { mode, mu, theta: 0.1, sigma: 8.41e-9, iid_std: 1.93e-8, floor: mu / 100.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.theta), || format!("theta={} not in [0,1]", self.theta))?;
        ensure(self.sigma >= 0.0, || format!("sigma={} < 0", self.sigma))?;
        ensure(self.iid_std >= 0.0, || format!("iid_std={} < 0", self.iid_std))?;
        ensure(self.floor > 0.0 && self.mu > self.floor, || {
            format!("need mu > floor > 0, got mu={} floor={}", self.mu, self.floor)
        })
    }

    pub fn cap(&self) -> f64 {
        2.0 * self.mu - self.floor
    }

    #[inline]
    pub fn clamp(&self, p: f64) -> f64 {
        p.max(self.floor).min(self.cap())
    }

    /// Std of the stationary law: closed form for ar1, `iid_std` for iid.
    /// `None` when ar1 has no stationary law (theta = 0).
    pub fn spread(&self) -> Option<f64> {
        match self.mode {
            PriceMode::Iid => Some(self.iid_std),
            PriceMode::Ar1 => stationary_std(self).ok(),
        }
    }

    /// Mean and std of the next price given the current one, before clamping.
    pub fn next_moments(&self, p: f64) -> (f64, f64) {
        match self.mode {
            PriceMode::Ar1 => (self.theta * self.mu + (1.0 - self.theta) * p, self.sigma),
            PriceMode::Iid => (self.mu, self.iid_std),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceState {
    pub p: f64,
}

fn require_mode(model: &PriceModel, mode: PriceMode) -> Result<()> {
    if model.mode == mode {
        Ok(())
    } else {
        Err(Error::WrongMode { expected: mode.name(), got: model.mode.name() })
    }
}

pub fn step_price_ar1(state: PriceState, model: &PriceModel, omega: f64) -> Result<PriceState> {
    require_mode(model, PriceMode::Ar1)?;
    let (m, s) = model.next_moments(state.p);
    Ok(PriceState { p: model.clamp(m + s * omega) })
}

pub fn sample_price_iid<R: Rng>(model: &PriceModel, rng: &mut R) -> Result<PriceState> {
    require_mode(model, PriceMode::Iid)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(PriceState { p: model.clamp(model.mu + model.iid_std * z) })
}

pub fn stationary_std(model: &PriceModel) -> Result<f64> {
    require_mode(model, PriceMode::Ar1)?;
    if model.theta <= 0.0 {
        return Err(Error::InvalidParam("theta = 0 has no stationary distribution".into()));
    }
    Ok(model.sigma / (model.theta * (2.0 - model.theta)).sqrt())
}

/// A price path driven by its own stream, one standard normal per block.
#[derive(Clone, Debug)]
pub struct PricePath {
    model: PriceModel,
    state: PriceState,
    rng: ChaCha8Rng,
}

impl PricePath {
    pub fn new(model: PriceModel, start: f64, rng: ChaCha8Rng) -> Self {
        Self { model, state: PriceState { p: model.clamp(start) }, rng }
    }

    #[inline]
    pub fn price(&self) -> f64 {
        self.state.p
    }

    #[inline]
    pub fn advance(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        let (m, s) = self.model.next_moments(self.state.p);
        self.state.p = self.model.clamp(m + s * z);
        self.state.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::RngStream;
    use approx::assert_relative_eq;

    fn ar1() -> PriceModel {
        PriceModel::calibrated(PriceMode::Ar1)
    }

    #[test]
    fn full_reversion_lands_on_mean() {
        let m = PriceModel { theta: 1.0, sigma: 0.0, ..ar1() };
        for p in [m.floor, 1e-8, 6e-8] {
            assert_eq!(step_price_ar1(PriceState { p }, &m, 1.3).unwrap().p, m.mu);
        }
    }

    #[test]
    fn mean_is_fixed_point() {
        let m = ar1();
        assert_relative_eq!(step_price_ar1(PriceState { p: m.mu }, &m, 0.0).unwrap().p, m.mu, max_relative = 1e-15);
    }

    #[test]
    fn ar1_step_hand_value() {
        let next = step_price_ar1(PriceState { p: 5.0e-8 }, &ar1(), 0.0).unwrap();
        assert_relative_eq!(next.p, 4.886e-8, max_relative = 1e-12);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let iid = PriceModel::calibrated(PriceMode::Iid);
        assert!(matches!(
            step_price_ar1(PriceState { p: iid.mu }, &iid, 0.0),
            Err(Error::WrongMode { .. })
        ));
        let mut rng = RngStream::new(1).rng();
        assert!(sample_price_iid(&ar1(), &mut rng).is_err());
        assert!(stationary_std(&iid).is_err());
    }

    #[test]
    fn degenerate_iid_is_mean() {
        let m = PriceModel { iid_std: 0.0, ..PriceModel::calibrated(PriceMode::Iid) };
        let mut rng = RngStream::new(3).rng();
        for _ in 0..100 {
            assert_eq!(sample_price_iid(&m, &mut rng).unwrap().p, m.mu);
        }
    }

    #[test]
    fn negative_draw_clamps_to_floor() {
        let m = ar1();
        assert_eq!(step_price_ar1(PriceState { p: m.mu }, &m, -100.0).unwrap().p, m.floor);
    }

    #[test]
    fn iid_sample_mean() {
        let m = PriceModel::calibrated(PriceMode::Iid);
        let mut rng = RngStream::new(11).rng();
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let p = sample_price_iid(&m, &mut rng).unwrap().p;
            s += p;
            s2 += p * p;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - m.mu).abs() <= 3.0 * se, "mean {mean:e} se {se:e}");
    }

    #[test]
    fn stationary_std_values() {
        let s = stationary_std(&ar1()).unwrap();
        assert_relative_eq!(s, 8.41e-9 / 0.19f64.sqrt(), max_relative = 1e-14);
        assert!((s / 1.93e-8 - 1.0).abs() < 0.002);
        assert_eq!(stationary_std(&PriceModel { theta: 1.0, ..ar1() }).unwrap(), 8.41e-9);
        assert_eq!(stationary_std(&PriceModel { sigma: 0.0, ..ar1() }).unwrap(), 0.0);
        assert!(stationary_std(&PriceModel { theta: 0.0, ..ar1() }).is_err());
    }

    #[test]
    fn ar1_ergodic_mean() {
        let m = ar1();
        let mut path = PricePath::new(m, m.mu, RngStream::new(5).rng());
        let n = 1_000_000;
        let mean = (0..n).map(|_| path.advance()).sum::<f64>() / n as f64;
        assert!((mean / m.mu - 1.0).abs() < 0.01);
    }

    #[test]
    fn validation() {
        assert!(ar1().validate().is_ok());
        assert!(PriceModel { theta: 1.5, ..ar1() }.validate().is_err());
        assert!(PriceModel { floor: 0.0, ..ar1() }.validate().is_err());
        assert!(PriceModel { floor: 1.0, ..ar1() }.validate().is_err());
    }
}
