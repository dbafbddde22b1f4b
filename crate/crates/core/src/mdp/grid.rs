use crate::error::{Error, Result};
use crate::process::{PriceMode, PriceModel};

use super::MdpConfig;

/// Uniform price grid with a row-stochastic one-block transition matrix.
#[derive(Clone, Debug)]
pub struct PriceGrid {
    points: Vec<f64>,
    /// Row-major `n x n`.
    transition: Vec<f64>,
    identical_rows: bool,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Gaussian mass on `[lo, hi)`, computed on whichever side avoids cancellation.
fn gaussian_mass(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

pub fn build_price_grid(model: &PriceModel, config: &MdpConfig) -> Result<PriceGrid> {
    model.validate()?;
    config.validate()?;
    let n = config.n_price;
    let (lo, hi) = match model.spread().filter(|s| *s > 0.0) {
        Some(s) => (
            model.floor.max(model.mu - config.grid_width_sds * s),
            model.cap().min(model.mu + config.grid_width_sds * s),
        ),
        // no stationary spread to scale by: cover the admissible band
        None => (model.floor, model.cap()),
    };
    if hi <= lo || hi <= model.floor {
        return Err(Error::InvalidParam(format!("degenerate price grid [{lo:e}, {hi:e}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let points: Vec<f64> = (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect();
    let edges: Vec<f64> = points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();

    let row_for = |p: f64| -> Vec<f64> {
        let (mean, sd) = model.next_moments(p);
        let mut row = vec![0.0; n];
        if sd <= 0.0 {
            row[nearest(&points, model.clamp(mean))] = 1.0;
            return row;
        }
        for (j, cell) in row.iter_mut().enumerate() {
            let a = if j == 0 { f64::NEG_INFINITY } else { edges[j - 1] };
            let b = if j == n - 1 { f64::INFINITY } else { edges[j] };
            *cell = gaussian_mass(a, b, mean, sd);
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= total);
        row
    };

    let identical_rows = model.mode == PriceMode::Iid;
    let transition = if identical_rows {
        let row = row_for(model.mu);
        (0..n).flat_map(|_| row.iter().copied()).collect()
    } else {
        points.iter().flat_map(|&p| row_for(p)).collect()
    };
    Ok(PriceGrid { points, transition, identical_rows })
}

fn nearest(points: &[f64], p: f64) -> usize {
    let n = points.len();
    let step = (points[n - 1] - points[0]) / (n - 1) as f64;
    let x = ((p - points[0]) / step).round();
    x.clamp(0.0, (n - 1) as f64) as usize
}

impl PriceGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.transition[i * n..(i + 1) * n]
    }

    pub fn identical_rows(&self) -> bool {
        self.identical_rows
    }

    /// Index of the grid point closest to `p` (prices outside snap to the ends).
    #[inline]
    pub fn nearest_index(&self, p: f64) -> usize {
        nearest(&self.points, p)
    }

    /// `out[i] = sum_j T[i][j] * v[j]`.
    pub fn expect(&self, v: &[f64], out: &mut [f64]) {
        let n = self.len();
        if self.identical_rows {
            let e = dot(self.row(0), v);
            out[..n].fill(e);
        } else {
            for (i, o) in out[..n].iter_mut().enumerate() {
                *o = dot(self.row(i), v);
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
