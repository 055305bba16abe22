//! Static ensemble baselines.

use crate::error::{Error, Result};
use crate::model::{QuantileForecast, QuantileLevels};

fn check_pool(forecasts: &[QuantileForecast]) -> Result<&QuantileLevels> {
    let first = forecasts
        .first()
        .ok_or(Error::InsufficientModels { needed: 1, got: 0 })?;
    if forecasts.iter().any(|q| q.levels() != first.levels()) {
        return Err(Error::DimensionMismatch(
            "forecasts use different quantile levels".into(),
        ));
    }
    Ok(first.levels())
}

fn per_level<F>(forecasts: &[QuantileForecast], combine: F) -> Result<QuantileForecast>
where
    F: Fn(&mut [f64]) -> f64,
{
    let levels = check_pool(forecasts)?;
    let mut column = Vec::with_capacity(forecasts.len());
    let mut values = (0..levels.len())
        .map(|k| {
            column.clear();
            column.extend(forecasts.iter().map(|q| q.values()[k]));
            combine(&mut column)
        })
        .collect::<Vec<_>>();
    // Absorb last-ulp rounding differences between levels.
    for k in 1..values.len() {
        values[k] = values[k].max(values[k - 1]);
    }
    QuantileForecast::new(levels.clone(), values)
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn mean_of(values: &mut [f64]) -> f64 {
    // Sorted summation keeps the result independent of model order.
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-level median across models.
pub fn quantile_median_ensemble(forecasts: &[QuantileForecast]) -> Result<QuantileForecast> {
    per_level(forecasts, median_of)
}

/// Per-level arithmetic mean across models.
pub fn quantile_mean_ensemble(forecasts: &[QuantileForecast]) -> Result<QuantileForecast> {
    per_level(forecasts, mean_of)
}

/// Mean of the models' median forecasts.
pub fn point_mean(forecasts: &[QuantileForecast]) -> Result<f64> {
    check_pool(forecasts)?;
    let mut medians = forecasts
        .iter()
        .map(QuantileForecast::median)
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_of(&mut medians))
}
