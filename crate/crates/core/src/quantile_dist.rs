//! Continuous inverse CDFs from discrete quantiles, inverse-transform
//! sampling, and empirical quantiles of pooled samples.
//!
//! Between the outermost levels the inverse CDF is a monotone piecewise cubic
//! Hermite interpolant (PCHIP slopes, Fritsch–Carlson style), so it never
//! overshoots the knots. Outside them it continues linearly with the slope of
//! the adjacent knot segment, clamped at zero.

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{QuantileForecast, QuantileLevels};

/// Inverse CDF estimated from one quantile forecast.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseCdf {
    levels: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    left_tail_slope: f64,
    right_tail_slope: f64,
}

/// Fit the monotone inverse CDF of `forecast`.
pub fn fit_inverse_cdf(forecast: &QuantileForecast) -> InverseCdf {
    let levels = forecast.levels().as_slice().to_vec();
    // Ties within the validation tolerance are flattened so every segment
    // has a non-negative secant.
    let mut values = forecast.values().to_vec();
    for k in 1..values.len() {
        values[k] = values[k].max(values[k - 1]);
    }
    let n = levels.len();
    if n == 1 {
        return InverseCdf {
            levels,
            values,
            slopes: vec![0.0],
            left_tail_slope: 0.0,
            right_tail_slope: 0.0,
        };
    }
    let h: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = values
        .windows(2)
        .zip(&h)
        .map(|(v, hk)| (v[1] - v[0]) / hk)
        .collect();
    let slopes = pchip_slopes(&h, &delta);
    InverseCdf {
        left_tail_slope: delta[0].max(0.0),
        right_tail_slope: delta[n - 2].max(0.0),
        levels,
        values,
        slopes,
    }
}

fn pchip_slopes(h: &[f64], delta: &[f64]) -> Vec<f64> {
    let n = delta.len() + 1;
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 <= 0.0 || d1 <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Shape-preserving one-sided three-point endpoint derivative.
fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

impl InverseCdf {
    /// Evaluate the inverse CDF at probability `p`.
    pub fn eval(&self, p: f64) -> f64 {
        let n = self.levels.len();
        let (first, last) = (self.levels[0], self.levels[n - 1]);
        if p <= first {
            return self.values[0] - (first - p) * self.left_tail_slope;
        }
        if p >= last {
            return self.values[n - 1] + (p - last) * self.right_tail_slope;
        }
        let k = self.levels.partition_point(|&a| a <= p) - 1;
        let (x0, x1) = (self.levels[k], self.levels[k + 1]);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let h = x1 - x0;
        let t = (p - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let v = y0
            + (y1 - y0) * (3.0 * t2 - 2.0 * t3)
            + h * (self.slopes[k] * (t3 - 2.0 * t2 + t) + self.slopes[k + 1] * (t3 - t2));
        v.clamp(y0, y1)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.levels.iter().copied().zip(self.values.iter().copied())
    }
}

/// Draw `n` inverse-transform samples `F^-1(p)` with `p ~ U(0, 1)`.
pub fn sample<R: Rng + ?Sized>(icdf: &InverseCdf, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let p: f64 = rng.sample(Open01);
            icdf.eval(p)
        })
        .collect()
}

/// Linear-interpolation empirical quantiles at position `(n - 1) * alpha`
/// (zero-indexed) of the sorted samples. Sorts `samples` in place.
pub fn empirical_quantiles_in_place(
    samples: &mut [f64],
    levels: &QuantileLevels,
) -> Result<QuantileForecast> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("samples".into()));
    }
    samples.sort_unstable_by(f64::total_cmp);
    let last = samples.len() - 1;
    let mut values: Vec<f64> = levels
        .as_slice()
        .iter()
        .map(|&alpha| {
            let pos = last as f64 * alpha;
            let lo = (pos.floor() as usize).min(last);
            let hi = (lo + 1).min(last);
            let frac = pos - lo as f64;
            (samples[lo] + frac * (samples[hi] - samples[lo])).clamp(samples[lo], samples[hi])
        })
        .collect();
    for k in 1..values.len() {
        values[k] = values[k].max(values[k - 1]);
    }
    Ok(QuantileForecast::from_trusted(levels.clone(), values))
}

/// Empirical quantiles of `samples`; see [`empirical_quantiles_in_place`].
pub fn empirical_quantiles(samples: &[f64], levels: &QuantileLevels) -> Result<QuantileForecast> {
    let mut owned = samples.to_vec();
    empirical_quantiles_in_place(&mut owned, levels)
}
