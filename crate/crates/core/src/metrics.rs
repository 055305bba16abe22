//! Probabilistic and point scoring, plus the series features used when
//! slicing results.
//!
//! CRPS is approximated by the mean weighted quantile loss over the forecast's
//! quantile levels. MASE is scaled by the in-sample MAE of the seasonal naive
//! forecast on the context.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::QuantileForecast;

/// Floor applied to `|y|` in the weighted quantile loss so that `y = 0`
/// yields a finite score.
pub const WQL_EPSILON: f64 = 1e-8;

/// Pinball (quantile) loss of predicting `q_hat` at level `alpha` when `y`
/// is observed.
pub fn pinball_loss(alpha: f64, q_hat: f64, y: f64) -> f64 {
    if y > q_hat {
        alpha * (y - q_hat)
    } else {
        (1.0 - alpha) * (q_hat - y)
    }
}

/// Pinball loss normalised by `|y|` and doubled.
pub fn weighted_quantile_loss(alpha: f64, q_hat: f64, y: f64) -> f64 {
    2.0 * pinball_loss(alpha, q_hat, y) / y.abs().max(WQL_EPSILON)
}

/// Quantile-approximated CRPS of a single forecast.
pub fn crps_timestep(forecast: &QuantileForecast, y: f64) -> f64 {
    let levels = forecast.levels().as_slice();
    let total: f64 = levels
        .iter()
        .zip(forecast.values())
        .map(|(&alpha, &q)| weighted_quantile_loss(alpha, q, y))
        .sum();
    total / levels.len() as f64
}

/// Per-timestep CRPS and its mean over a horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrpsSummary {
    pub crps: f64,
    pub per_timestep: Vec<f64>,
}

pub fn crps_series(forecasts: &[QuantileForecast], actuals: &[f64]) -> Result<CrpsSummary> {
    if forecasts.len() != actuals.len() {
        return Err(Error::LengthMismatch {
            expected: actuals.len(),
            actual: forecasts.len(),
        });
    }
    if forecasts.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot score an empty horizon".into(),
        ));
    }
    let per_timestep: Vec<f64> = forecasts
        .iter()
        .zip(actuals)
        .map(|(q, &y)| crps_timestep(q, y))
        .collect();
    Ok(CrpsSummary {
        crps: mean(&per_timestep),
        per_timestep,
    })
}

/// Mean absolute scaled error against the seasonal naive benchmark.
pub fn mase(
    point_forecasts: &[f64],
    actuals: &[f64],
    context: &[f64],
    seasonality: usize,
) -> Result<f64> {
    if point_forecasts.len() != actuals.len() {
        return Err(Error::LengthMismatch {
            expected: actuals.len(),
            actual: point_forecasts.len(),
        });
    }
    if actuals.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot score an empty horizon".into(),
        ));
    }
    if seasonality == 0 {
        return Err(Error::InvalidArgument(
            "seasonality must be positive".into(),
        ));
    }
    if context.len() <= seasonality {
        return Err(Error::SeriesTooShort {
            needed: seasonality + 1,
            got: context.len(),
        });
    }
    let naive: Vec<f64> = context[seasonality..]
        .iter()
        .zip(context)
        .map(|(now, lagged)| (now - lagged).abs())
        .collect();
    let scale = mean(&naive);
    if scale == 0.0 {
        return Err(Error::ZeroDenominator { seasonality });
    }
    let errors: Vec<f64> = point_forecasts
        .iter()
        .zip(actuals)
        .map(|(f, y)| (f - y).abs())
        .collect();
    Ok(mean(&errors) / scale)
}

/// CRPS and MASE of one forecast path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub crps: f64,
    pub mase: f64,
    pub per_timestep_crps: Vec<f64>,
}

/// Score a horizon of quantile forecasts; MASE uses the 0.5-level values.
pub fn score_forecasts(
    forecasts: &[QuantileForecast],
    actuals: &[f64],
    context: &[f64],
    seasonality: usize,
) -> Result<ScoreSummary> {
    let crps = crps_series(forecasts, actuals)?;
    let points = forecasts
        .iter()
        .map(QuantileForecast::median)
        .collect::<Result<Vec<_>>>()?;
    let mase = mase(&points, actuals, context, seasonality)?;
    Ok(ScoreSummary {
        crps: crps.crps,
        mase,
        per_timestep_crps: crps.per_timestep,
    })
}

/// Tile width used when none is supplied: `max(10, len / 20)`.
pub fn default_tile_width(len: usize) -> usize {
    (len / 20).max(10)
}

/// Variance of the variances of non-overlapping tiles of the standardised
/// series. Trailing values that do not fill a whole tile are ignored.
pub fn lumpiness(series: &[f64], tile_width: usize) -> Result<f64> {
    if tile_width < 2 {
        return Err(Error::InvalidArgument(
            "tile width must be at least 2".into(),
        ));
    }
    if series.len() < 2 * tile_width {
        return Err(Error::SeriesTooShort {
            needed: 2 * tile_width,
            got: series.len(),
        });
    }
    let mu = mean(series);
    let sd = sample_variance(series).sqrt();
    if sd == 0.0 {
        return Ok(0.0);
    }
    let standardized: Vec<f64> = series.iter().map(|x| (x - mu) / sd).collect();
    let tile_vars: Vec<f64> = standardized
        .chunks_exact(tile_width)
        .map(sample_variance)
        .collect();
    Ok(sample_variance(&tile_vars))
}

/// Pearson product-moment correlation.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: xs.len(),
        });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64
}
