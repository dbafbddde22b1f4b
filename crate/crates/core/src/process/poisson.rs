use rand::Rng;

/// Poisson pmf on `0..len`, where `len` is at least `min_len` and far enough
/// into the right tail that the mass beyond it is below 1e-30. Normalized to
/// sum to one.
///
/// Built outward from the mode so large rates do not underflow `exp(-rate)`.
pub fn poisson_pmf(rate: f64, min_len: usize) -> Vec<f64> {
    let reach = (rate + 14.0 * rate.sqrt() + 40.0).ceil() as usize;
    let len = min_len.max(reach).max(1);
    let mut pmf = vec![0.0; len];
    if rate <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    let mode = (rate.floor() as usize).min(len - 1);
    let m = mode as f64;
    pmf[mode] = (m * rate.ln() - rate - libm::lgamma(m + 1.0)).exp();
    for k in (1..=mode).rev() {
        pmf[k - 1] = pmf[k] * k as f64 / rate;
    }
    for k in mode..len - 1 {
        pmf[k + 1] = pmf[k] * rate / (k + 1) as f64;
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    pmf
}

/// Exact inverse-transform Poisson sampler: one uniform per draw.
///
/// For a fixed uniform the draw is nondecreasing in the rate, which is what
/// makes common random numbers couple arrivals monotonically across fees.
#[derive(Clone, Debug)]
pub struct PoissonSampler {
    rate: f64,
    cdf: Vec<f64>,
}

impl PoissonSampler {
    pub fn new(rate: f64) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = poisson_pmf(rate, 1)
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // trailing entries that cannot be reached
        while cdf.len() > 1 && cdf[cdf.len() - 2] >= 1.0 {
            cdf.pop();
        }
        Self { rate, cdf }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    #[inline]
    pub fn quantile(&self, u: f64) -> u64 {
        let k = self.cdf.partition_point(|&c| c <= u);
        k.min(self.cdf.len() - 1) as u64
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        self.quantile(rng.random::<f64>())
    }
}
