use rand::Rng;

use crate::error::{ensure, Result};

use super::poisson::PoissonSampler;

/// Linear fee-elastic demand: `lambda0 - k * fee` transactions per L1 block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DemandModel {
    pub lambda0: f64,
    pub k: f64,
}

impl DemandModel {
    pub fn calibrated() -> Self {
        Self { lambda0: 180.0, k: 1.67e6 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.lambda0 > 0.0 && self.k > 0.0, || {
            format!("need lambda0 > 0 and k > 0, got {} and {}", self.lambda0, self.k)
        })
    }

    /// Fee at which demand vanishes.
    pub fn choke_fee(&self) -> f64 {
        self.lambda0 / self.k
    }

    #[inline]
    pub fn rate(&self, g: f64) -> f64 {
        (self.lambda0 - self.k * g).max(0.0)
    }
}

pub fn arrival_rate(model: &DemandModel, g: f64) -> Result<f64> {
    ensure(g >= 0.0, || format!("fee {g} is negative"))?;
    Ok(model.rate(g))
}

/// One Poisson draw at the fee's rate. Builds a sampler per call; hot loops
/// should hold a [`PoissonSampler`] instead.
pub fn sample_arrivals<R: Rng>(model: &DemandModel, g: f64, rng: &mut R) -> Result<u64> {
    let rate = arrival_rate(model, g)?;
    Ok(PoissonSampler::new(rate).sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::RngStream;

    #[test]
    fn rate_values() {
        let d = DemandModel::calibrated();
        assert_eq!(arrival_rate(&d, 0.0).unwrap(), 180.0);
        assert_eq!(arrival_rate(&d, 1.08e-4).unwrap(), 0.0);
        assert!((arrival_rate(&d, 3.6e-5).unwrap() - 119.88).abs() < 1e-9);
        assert!(arrival_rate(&d, -1e-9).is_err());
    }

    #[test]
    fn zero_rate_never_arrives() {
        let d = DemandModel::calibrated();
        let mut rng = RngStream::new(2).rng();
        for _ in 0..1000 {
            assert_eq!(sample_arrivals(&d, 2e-4, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn poisson_moments() {
        let d = DemandModel::calibrated();
        let rate = d.rate(3.6e-5);
        let sampler = PoissonSampler::new(rate);
        let mut rng = RngStream::new(9).rng();
        let n = 1_000_000usize;
        let xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (rate / n as f64).sqrt();
        // Var of the sample variance for Poisson: (mu4 - sigma^4)/n with mu4 = rate(1 + 3 rate)
        let se_var = ((rate + 2.0 * rate * rate) / n as f64).sqrt();
        assert!((mean - rate).abs() <= 3.0 * se_mean, "mean {mean}");
        assert!((var - rate).abs() <= 3.0 * se_var, "var {var}");
    }
}
