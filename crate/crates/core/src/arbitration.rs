//! Dynamic arbitration over a pool of quantile forecasters.
//!
//! At every horizon step the arbitrator scores each model on a rolling
//! performance window, turns the scores into weights, and builds the output
//! distribution by pooling inverse-transform samples from every model in
//! proportion to its weight. The median of the pooled forecast is then used
//! as a simulated observation and pushed into the window, so later steps are
//! weighted by agreement with the emerging consensus.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::crps_timestep;
use crate::model::{
    ForecastPanel, PerformanceRecord, PerformanceWindow, QuantileForecast, QuantileLevels,
    WeightVector,
};
use crate::quantile_dist::{empirical_quantiles_in_place, fit_inverse_cdf, sample};
use crate::rng::SeedStream;

pub const DEFAULT_N_TOTAL: usize = 1500;
pub const DEFAULT_MAX_WINDOW: usize = 16;
pub const DEFAULT_SOFTMAX_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_ZERO_SCORE_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingMode {
    /// Inverse-error weights from the rolling window.
    #[default]
    Dynamic,
    /// Fixed `1 / N` weights (no window feedback).
    StaticUniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArbitratorConfig {
    pub n_total: usize,
    /// Rolling window length; `None` means `min(T, 16)`.
    pub window_capacity: Option<usize>,
    pub softmax_temperature: f64,
    /// Scores at or below this trigger the softmax fallback.
    pub zero_score_epsilon: f64,
    pub weighting: WeightingMode,
}

impl Default for ArbitratorConfig {
    fn default() -> Self {
        Self {
            n_total: DEFAULT_N_TOTAL,
            window_capacity: None,
            softmax_temperature: DEFAULT_SOFTMAX_TEMPERATURE,
            zero_score_epsilon: DEFAULT_ZERO_SCORE_EPSILON,
            weighting: WeightingMode::Dynamic,
        }
    }
}

impl ArbitratorConfig {
    pub fn static_uniform() -> Self {
        Self {
            weighting: WeightingMode::StaticUniform,
            ..Self::default()
        }
    }

    /// Window capacity for a horizon of length `horizon`.
    pub fn resolved_window(&self, horizon: usize) -> usize {
        self.window_capacity
            .unwrap_or_else(|| horizon.min(DEFAULT_MAX_WINDOW))
            .max(1)
    }

    pub fn validate(&self, n_models: usize) -> Result<()> {
        if n_models == 0 {
            return Err(Error::InsufficientModels { needed: 1, got: 0 });
        }
        if self.n_total < n_models {
            return Err(Error::InvalidArgument(format!(
                "n_total {} is smaller than the pool size {n_models}",
                self.n_total
            )));
        }
        if self.window_capacity == Some(0) {
            return Err(Error::InvalidArgument(
                "window capacity must be at least 1".into(),
            ));
        }
        if !(self.softmax_temperature.is_finite() && self.softmax_temperature > 0.0) {
            return Err(Error::InvalidArgument(
                "softmax temperature must be positive".into(),
            ));
        }
        if self.zero_score_epsilon.is_nan() || self.zero_score_epsilon < 0.0 {
            return Err(Error::InvalidArgument(
                "epsilon must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Which rule produced a step's weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingPath {
    Uniform,
    InverseError,
    Softmax,
}

/// Mean CRPS of every model over the window's records.
pub fn average_crps_scores(window: &PerformanceWindow) -> Result<Vec<f64>> {
    let n = window.n_models().ok_or(Error::EmptyWindow)?;
    let mut totals = vec![0.0; n];
    for record in window.records() {
        for (total, forecast) in totals.iter_mut().zip(&record.forecasts) {
            *total += crps_timestep(forecast, record.observation);
        }
    }
    let len = window.len() as f64;
    Ok(totals.into_iter().map(|s| s / len).collect())
}

// Summation in sorted order makes the normaliser independent of model order.
fn order_free_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.iter().sum()
}

fn normalize(raw: Vec<f64>) -> WeightVector {
    let total = order_free_sum(&raw);
    WeightVector::from_trusted(raw.into_iter().map(|w| w / total).collect())
}

/// Weights from window scores, plus the rule that produced them.
pub fn compute_weights_with_path(
    scores: &[f64],
    config: &ArbitratorConfig,
) -> Result<(WeightVector, WeightingPath)> {
    if scores.is_empty() {
        return Err(Error::InsufficientModels { needed: 1, got: 0 });
    }
    if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidArgument(
            "scores must be finite and non-negative".into(),
        ));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    if min > config.zero_score_epsilon {
        let inverse = scores.iter().map(|s| 1.0 / s).collect();
        Ok((normalize(inverse), WeightingPath::InverseError))
    } else {
        // Shifting by the minimum keeps the largest exponent at zero.
        let tau = config.softmax_temperature;
        let exps = scores.iter().map(|s| (-(s - min) / tau).exp()).collect();
        Ok((normalize(exps), WeightingPath::Softmax))
    }
}

/// Inverse-error weights, falling back to `softmax(-s / tau)` when some
/// score is numerically zero.
pub fn compute_weights(scores: &[f64], config: &ArbitratorConfig) -> Result<WeightVector> {
    compute_weights_with_path(scores, config).map(|(w, _)| w)
}

/// Largest-remainder apportionment of `n_total` samples; remainder ties go
/// to the lowest model index.
pub fn allocate_samples(weights: &WeightVector, n_total: usize) -> Vec<usize> {
    let priority: Vec<usize> = (0..weights.len()).collect();
    allocate_samples_with_priority(weights, n_total, &priority)
}

/// Largest-remainder apportionment; remainder ties go to the model with the
/// smaller `priority` value.
pub fn allocate_samples_with_priority(
    weights: &WeightVector,
    n_total: usize,
    priority: &[usize],
) -> Vec<usize> {
    let w = weights.as_slice();
    debug_assert_eq!(w.len(), priority.len());
    let quotas: Vec<f64> = w.iter().map(|wi| wi * n_total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    if assigned > n_total {
        // Only reachable through accumulated roundoff; trim the largest.
        let mut excess = assigned - n_total;
        while excess > 0 {
            let i = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap();
            counts[i] -= 1;
            excess -= 1;
        }
        return counts;
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra)
            .unwrap_or(Ordering::Equal)
            .then(priority[a].cmp(&priority[b]))
    });
    for &i in order.iter().cycle().take(n_total - assigned) {
        counts[i] += 1;
    }
    counts
}

fn shared_levels(forecasts: &[QuantileForecast]) -> Result<QuantileLevels> {
    let first = forecasts
        .first()
        .ok_or(Error::InsufficientModels { needed: 1, got: 0 })?;
    if forecasts.iter().any(|q| q.levels() != first.levels()) {
        return Err(Error::DimensionMismatch(
            "forecasts use different quantile levels".into(),
        ));
    }
    Ok(first.levels().clone())
}

/// Pool `counts[i]` samples from every model's inverse CDF and return the
/// empirical quantiles of the pool.
pub fn pooled_quantiles<R: Rng>(
    forecasts: &[QuantileForecast],
    counts: &[usize],
    rngs: &mut [R],
) -> Result<QuantileForecast> {
    let levels = shared_levels(forecasts)?;
    if counts.len() != forecasts.len() || rngs.len() != forecasts.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} forecasts, {} counts, {} random streams",
            forecasts.len(),
            counts.len(),
            rngs.len()
        )));
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::AllZeroAllocation);
    }
    let mut pool = Vec::with_capacity(total);
    for ((forecast, &n), rng) in forecasts.iter().zip(counts).zip(rngs.iter_mut()) {
        if n > 0 {
            pool.extend(sample(&fit_inverse_cdf(forecast), n, rng));
        }
    }
    empirical_quantiles_in_place(&mut pool, &levels)
}

/// One arbitration step: allocate samples by weight, pool them, requantize.
/// `rngs` holds one stream per model.
pub fn arbitrate_timestep<R: Rng>(
    forecasts: &[QuantileForecast],
    weights: &WeightVector,
    config: &ArbitratorConfig,
    rngs: &mut [R],
) -> Result<(QuantileForecast, Vec<usize>)> {
    if weights.len() != forecasts.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} forecasts",
            weights.len(),
            forecasts.len()
        )));
    }
    let counts = allocate_samples(weights, config.n_total);
    let out = pooled_quantiles(forecasts, &counts, rngs)?;
    Ok((out, counts))
}

/// Median of a forecast: its 0.5-level value, or the interpolated inverse
/// CDF at 0.5 when that level is absent.
pub fn forecast_median(forecast: &QuantileForecast) -> f64 {
    forecast
        .median()
        .unwrap_or_else(|_| fit_inverse_cdf(forecast).eval(0.5))
}

/// State recorded for one horizon step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub quantiles: QuantileForecast,
    pub weights: WeightVector,
    pub sample_counts: Vec<usize>,
    /// Window scores, absent when the step used uniform weights.
    pub scores: Option<Vec<f64>>,
    pub path: WeightingPath,
    pub simulated_observation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArbitrationTrace {
    pub series_id: String,
    pub model_names: Vec<String>,
    pub steps: Vec<TraceStep>,
}

impl ArbitrationTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The arbitrated forecast path.
    pub fn forecasts(&self) -> Vec<QuantileForecast> {
        self.steps.iter().map(|s| s.quantiles.clone()).collect()
    }
}

/// Tie priority for each model: its rank in name order.
fn name_priority(names: &[&str]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(names[b]));
    let mut rank = vec![0; names.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Arbitrate the full horizon of `panel`, feeding simulated observations
/// back into `window` after every step.
///
/// Random streams are keyed by series id, timestep and model name.
pub fn run_arbitration(
    panel: &ForecastPanel,
    initial_window: PerformanceWindow,
    config: &ArbitratorConfig,
    seeds: &SeedStream,
) -> Result<ArbitrationTrace> {
    let n = panel.n_models();
    config.validate(n)?;
    if let Some(m) = initial_window.n_models() {
        if m != n {
            return Err(Error::DimensionMismatch(format!(
                "window records hold {m} models, panel has {n}"
            )));
        }
    }
    let names = panel.model_names();
    let priority = name_priority(&names);
    let mut window = initial_window;
    let mut steps = Vec::with_capacity(panel.horizon());

    for t in 0..panel.horizon() {
        let forecasts = panel.forecasts_at(t);
        let (weights, path, scores) = match config.weighting {
            WeightingMode::StaticUniform => {
                (WeightVector::uniform(n), WeightingPath::Uniform, None)
            }
            WeightingMode::Dynamic if window.is_empty() => {
                (WeightVector::uniform(n), WeightingPath::Uniform, None)
            }
            WeightingMode::Dynamic => {
                let scores = average_crps_scores(&window)?;
                let (w, path) = compute_weights_with_path(&scores, config)?;
                (w, path, Some(scores))
            }
        };
        let counts = allocate_samples_with_priority(&weights, config.n_total, &priority);
        let mut rngs: Vec<_> = names
            .iter()
            .map(|name| seeds.for_model(panel.series_id(), t, name))
            .collect();
        let quantiles = pooled_quantiles(&forecasts, &counts, &mut rngs)?;
        let simulated = forecast_median(&quantiles);
        window.push(PerformanceRecord {
            observation: simulated,
            forecasts,
        })?;
        steps.push(TraceStep {
            quantiles,
            weights,
            sample_counts: counts,
            scores,
            path,
            simulated_observation: simulated,
        });
    }
    Ok(ArbitrationTrace {
        series_id: panel.series_id().to_string(),
        model_names: names.into_iter().map(String::from).collect(),
        steps,
    })
}

/// Build a performance window from backtest forecasts over the last context
/// steps, using the true context values as observations.
///
/// `backtest[i]` holds model `i`'s forecasts for the final `B` context
/// steps, oldest first. Only the most recent `min(capacity, B)` are kept.
pub fn seed_window_from_context(
    panel: &ForecastPanel,
    backtest: Option<&[Vec<QuantileForecast>]>,
    capacity: usize,
) -> Result<PerformanceWindow> {
    let mut window = PerformanceWindow::new(capacity)?;
    let Some(backtest) = backtest else {
        return Ok(window);
    };
    if backtest.len() != panel.n_models() {
        return Err(Error::AlignmentMismatch(format!(
            "{} backtest matrices for {} models",
            backtest.len(),
            panel.n_models()
        )));
    }
    let steps = backtest.first().map_or(0, Vec::len);
    if backtest.iter().any(|m| m.len() != steps) {
        return Err(Error::AlignmentMismatch(
            "models have different backtest lengths".into(),
        ));
    }
    let context = panel.context();
    if steps > context.len() {
        return Err(Error::AlignmentMismatch(format!(
            "{steps} backtest steps for a context of length {}",
            context.len()
        )));
    }
    if backtest
        .iter()
        .flatten()
        .any(|q| q.levels() != panel.levels())
    {
        return Err(Error::AlignmentMismatch(
            "backtest uses different quantile levels".into(),
        ));
    }
    let offset = context.len() - steps;
    for j in steps.saturating_sub(capacity)..steps {
        window.push(PerformanceRecord {
            observation: context[offset + j],
            forecasts: backtest.iter().map(|m| m[j].clone()).collect(),
        })?;
    }
    Ok(window)
}

/// Window seeded from the backtest forecasts stored in the panel, if any.
pub fn initial_window(panel: &ForecastPanel, capacity: usize) -> Result<PerformanceWindow> {
    if panel.backtest_len() == 0 {
        return PerformanceWindow::new(capacity);
    }
    let backtest: Vec<Vec<QuantileForecast>> =
        panel.models().iter().map(|m| m.backtest.clone()).collect();
    seed_window_from_context(panel, Some(&backtest), capacity)
}
