//! Domain types shared by every module.
//!
//! All types validate their invariants at construction and are immutable
//! afterwards (the performance window is the one mutable container, and it
//! is owned by a single arbitration run).

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which a decrease between adjacent quantile
/// values is treated as a tie rather than a violation.
pub const MONOTONE_REL_TOL: f64 = 1e-12;

/// Tolerance on the sum of a [`WeightVector`].
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Strictly increasing probability levels in the open interval (0, 1).
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantileLevels(Arc<[f64]>);

impl QuantileLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidLevels("no levels given".into()));
        }
        if let Some(bad) = levels.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidLevels(format!("{bad} is outside (0, 1)")));
        }
        if let Some(w) = levels.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidLevels(format!(
                "levels must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self(levels.into()))
    }

    /// The deciles 0.1, 0.2, ..., 0.9.
    pub fn deciles() -> Self {
        Self((1..=9).map(|k| k as f64 / 10.0).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the 0.5 level, if present.
    pub fn median_index(&self) -> Option<usize> {
        self.0.iter().position(|&a| a == 0.5)
    }
}

impl Default for QuantileLevels {
    fn default() -> Self {
        Self::deciles()
    }
}

impl fmt::Debug for QuantileLevels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl TryFrom<Vec<f64>> for QuantileLevels {
    type Error = Error;

    fn try_from(levels: Vec<f64>) -> Result<Self> {
        Self::new(levels)
    }
}

impl From<QuantileLevels> for Vec<f64> {
    fn from(levels: QuantileLevels) -> Self {
        levels.0.to_vec()
    }
}

/// One model's predictive distribution at one timestep, given by its values
/// at a fixed set of quantile levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuantileForecast")]
pub struct QuantileForecast {
    levels: QuantileLevels,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawQuantileForecast {
    levels: QuantileLevels,
    values: Vec<f64>,
}

impl TryFrom<RawQuantileForecast> for QuantileForecast {
    type Error = Error;

    fn try_from(raw: RawQuantileForecast) -> Result<Self> {
        Self::new(raw.levels, raw.values)
    }
}

/// Returns the first adjacent pair `(k, k + 1)` whose values decrease by more
/// than the relative tie tolerance.
pub fn first_decrease(values: &[f64]) -> Option<(usize, usize)> {
    values
        .windows(2)
        .position(|w| {
            let tol = MONOTONE_REL_TOL * w[0].abs().max(w[1].abs());
            w[0] - w[1] > tol
        })
        .map(|k| (k, k + 1))
}

impl QuantileForecast {
    pub fn new(levels: QuantileLevels, values: Vec<f64>) -> Result<Self> {
        if values.len() != levels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} quantile values for {} levels",
                values.len(),
                levels.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantile values".into()));
        }
        if let Some((lower, upper)) = first_decrease(&values) {
            return Err(Error::NonMonotoneQuantiles {
                model: String::new(),
                timestep: 0,
                lower,
                upper,
            });
        }
        Ok(Self { levels, values })
    }

    /// A degenerate forecast placing every quantile at `value`.
    pub fn point_mass(levels: QuantileLevels, value: f64) -> Result<Self> {
        let values = vec![value; levels.len()];
        Self::new(levels, values)
    }

    /// Construct from values already known to satisfy the invariants.
    pub(crate) fn from_trusted(levels: QuantileLevels, values: Vec<f64>) -> Self {
        debug_assert_eq!(levels.len(), values.len());
        debug_assert!(first_decrease(&values).is_none());
        Self { levels, values }
    }

    pub fn levels(&self) -> &QuantileLevels {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the 0.5 level.
    pub fn median(&self) -> Result<f64> {
        self.levels
            .median_index()
            .map(|k| self.values[k])
            .ok_or(Error::NoMedianLevel)
    }
}

/// GIFT-Eval style horizon bucket; assigned by metadata, never inferred.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum HorizonClass {
    #[default]
    Short,
    Medium,
    Long,
}

impl HorizonClass {
    pub const ALL: [HorizonClass; 3] = [
        HorizonClass::Short,
        HorizonClass::Medium,
        HorizonClass::Long,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HorizonClass::Short => "short",
            HorizonClass::Medium => "medium",
            HorizonClass::Long => "long",
        }
    }
}

impl fmt::Display for HorizonClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HorizonClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "short" => Ok(HorizonClass::Short),
            "medium" => Ok(HorizonClass::Medium),
            "long" => Ok(HorizonClass::Long),
            other => Err(Error::InvalidArgument(format!(
                "unknown horizon class `{other}`"
            ))),
        }
    }
}

/// Grouping tags carried alongside a panel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelMeta {
    #[serde(default = "PanelMeta::default_domain")]
    pub domain: String,
    #[serde(default)]
    pub horizon_class: HorizonClass,
    #[serde(default)]
    pub frequency: String,
}

impl PanelMeta {
    fn default_domain() -> String {
        "unknown".to_string()
    }
}

impl Default for PanelMeta {
    fn default() -> Self {
        Self {
            domain: Self::default_domain(),
            horizon_class: HorizonClass::default(),
            frequency: String::new(),
        }
    }
}

/// Unvalidated per-model forecast matrices, as they appear on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModelForecasts {
    pub name: String,
    /// `T` rows of `K` quantile values.
    pub quantiles: Vec<Vec<f64>>,
    /// Optional rows of `K` quantile values for the last context steps,
    /// oldest first. Used to seed the performance window.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub backtest: Vec<Vec<f64>>,
}

/// Unvalidated panel. Convert with [`validate_panel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPanel {
    pub series_id: String,
    pub context: Vec<f64>,
    #[serde(default)]
    pub actuals: Option<Vec<f64>>,
    pub horizon: usize,
    pub seasonality: usize,
    pub levels: Vec<f64>,
    pub models: Vec<RawModelForecasts>,
    #[serde(default)]
    pub meta: PanelMeta,
}

/// One model's validated forecasts over the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelForecasts {
    pub name: String,
    pub steps: Vec<QuantileForecast>,
    pub backtest: Vec<QuantileForecast>,
}

/// The evaluation unit: one series, its context, optional actuals, and every
/// model's quantile forecasts over the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPanel", into = "RawPanel")]
pub struct ForecastPanel {
    series_id: String,
    context: Vec<f64>,
    actuals: Option<Vec<f64>>,
    horizon: usize,
    seasonality: usize,
    levels: QuantileLevels,
    models: Vec<ModelForecasts>,
    meta: PanelMeta,
}

impl TryFrom<RawPanel> for ForecastPanel {
    type Error = Error;

    fn try_from(raw: RawPanel) -> Result<Self> {
        validate_panel(raw)
    }
}

impl From<ForecastPanel> for RawPanel {
    fn from(panel: ForecastPanel) -> Self {
        let rows = |steps: &[QuantileForecast]| steps.iter().map(|q| q.values.clone()).collect();
        RawPanel {
            series_id: panel.series_id,
            context: panel.context,
            actuals: panel.actuals,
            horizon: panel.horizon,
            seasonality: panel.seasonality,
            levels: panel.levels.as_slice().to_vec(),
            models: panel
                .models
                .iter()
                .map(|m| RawModelForecasts {
                    name: m.name.clone(),
                    quantiles: rows(&m.steps),
                    backtest: rows(&m.backtest),
                })
                .collect(),
            meta: panel.meta,
        }
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn validate_rows(
    model: &str,
    rows: Vec<Vec<f64>>,
    levels: &QuantileLevels,
) -> Result<Vec<QuantileForecast>> {
    rows.into_iter()
        .enumerate()
        .map(|(t, row)| {
            if row.len() != levels.len() {
                return Err(Error::DimensionMismatch(format!(
                    "model `{model}` has {} quantiles at timestep {t}, expected {}",
                    row.len(),
                    levels.len()
                )));
            }
            check_finite(&row, &format!("model `{model}` at timestep {t}"))?;
            if let Some((lower, upper)) = first_decrease(&row) {
                return Err(Error::NonMonotoneQuantiles {
                    model: model.to_string(),
                    timestep: t,
                    lower,
                    upper,
                });
            }
            Ok(QuantileForecast::from_trusted(levels.clone(), row))
        })
        .collect()
}

/// Check every panel invariant and build the validated panel.
pub fn validate_panel(raw: RawPanel) -> Result<ForecastPanel> {
    let levels = QuantileLevels::new(raw.levels)?;
    if raw.horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if raw.seasonality == 0 {
        return Err(Error::InvalidArgument(
            "seasonality must be positive".into(),
        ));
    }
    check_finite(&raw.context, "context")?;
    if raw.context.len() < raw.seasonality + 1 {
        return Err(Error::SeriesTooShort {
            needed: raw.seasonality + 1,
            got: raw.context.len(),
        });
    }
    if let Some(actuals) = &raw.actuals {
        if actuals.len() != raw.horizon {
            return Err(Error::DimensionMismatch(format!(
                "{} actuals for horizon {}",
                actuals.len(),
                raw.horizon
            )));
        }
        check_finite(actuals, "actuals")?;
    }
    if raw.models.is_empty() {
        return Err(Error::DimensionMismatch("panel has no models".into()));
    }
    let mut names = HashSet::new();
    let backtest_len = raw.models[0].backtest.len();
    let mut models = Vec::with_capacity(raw.models.len());
    for m in raw.models {
        if !names.insert(m.name.clone()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate model name `{}`",
                m.name
            )));
        }
        if m.quantiles.len() != raw.horizon {
            return Err(Error::DimensionMismatch(format!(
                "model `{}` has {} timesteps, horizon is {}",
                m.name,
                m.quantiles.len(),
                raw.horizon
            )));
        }
        if m.backtest.len() != backtest_len {
            return Err(Error::DimensionMismatch(format!(
                "model `{}` has {} backtest steps, expected {backtest_len}",
                m.name,
                m.backtest.len()
            )));
        }
        if backtest_len > raw.context.len() {
            return Err(Error::DimensionMismatch(format!(
                "{backtest_len} backtest steps exceed context length {}",
                raw.context.len()
            )));
        }
        let steps = validate_rows(&m.name, m.quantiles, &levels)?;
        let backtest = validate_rows(&m.name, m.backtest, &levels)?;
        models.push(ModelForecasts {
            name: m.name,
            steps,
            backtest,
        });
    }
    Ok(ForecastPanel {
        series_id: raw.series_id,
        context: raw.context,
        actuals: raw.actuals,
        horizon: raw.horizon,
        seasonality: raw.seasonality,
        levels,
        models,
        meta: raw.meta,
    })
}

impl ForecastPanel {
    pub fn series_id(&self) -> &str {
        &self.series_id
    }

    pub fn context(&self) -> &[f64] {
        &self.context
    }

    pub fn actuals(&self) -> Option<&[f64]> {
        self.actuals.as_deref()
    }

    /// Actuals, or [`Error::MissingActuals`] for evaluation-free panels.
    pub fn require_actuals(&self) -> Result<&[f64]> {
        self.actuals()
            .ok_or_else(|| Error::MissingActuals(self.series_id.clone()))
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn seasonality(&self) -> usize {
        self.seasonality
    }

    pub fn levels(&self) -> &QuantileLevels {
        &self.levels
    }

    pub fn models(&self) -> &[ModelForecasts] {
        &self.models
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn model_names(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.name.as_str()).collect()
    }

    pub fn meta(&self) -> &PanelMeta {
        &self.meta
    }

    /// Every model's forecast at timestep `t`, in model order.
    pub fn forecasts_at(&self, t: usize) -> Vec<QuantileForecast> {
        self.models.iter().map(|m| m.steps[t].clone()).collect()
    }

    /// Number of backtest steps shared by all models.
    pub fn backtest_len(&self) -> usize {
        self.models[0].backtest.len()
    }

    /// Same panel restricted to the models at `indices`, in that order.
    pub fn select_models(&self, indices: &[usize]) -> Result<ForecastPanel> {
        if indices.is_empty() {
            return Err(Error::InsufficientModels { needed: 1, got: 0 });
        }
        let mut models = Vec::with_capacity(indices.len());
        for &i in indices {
            let m = self
                .models
                .get(i)
                .ok_or_else(|| Error::InvalidArgument(format!("model index {i} out of range")))?;
            models.push(m.clone());
        }
        let mut out = self.clone();
        out.models = models;
        Ok(out)
    }

    /// Same panel with its metadata replaced.
    pub fn with_meta(mut self, meta: PanelMeta) -> Self {
        self.meta = meta;
        self
    }
}

/// Non-negative per-model weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        check_finite(&weights, "weights")?;
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidArgument("negative weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform weights need at least one model");
        Self(vec![1.0 / n as f64; n])
    }

    pub(crate) fn from_trusted(weights: Vec<f64>) -> Self {
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL);
        Self(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// An observation (actual or simulated) paired with every model's forecast
/// for the same timestep.
#[derive(Clone, Debug, PartialEq)]
pub struct PerformanceRecord {
    pub observation: f64,
    pub forecasts: Vec<QuantileForecast>,
}

/// Bounded FIFO of performance records.
#[derive(Clone, Debug, PartialEq)]
pub struct PerformanceWindow {
    capacity: usize,
    records: VecDeque<PerformanceRecord>,
}

impl PerformanceWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument(
                "window capacity must be at least 1".into(),
            ));
        }
        Ok(Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
        })
    }

    /// Append a record, evicting the oldest one when the window is full.
    pub fn push(&mut self, record: PerformanceRecord) -> Result<()> {
        if let Some(first) = self.records.front() {
            if first.forecasts.len() != record.forecasts.len() {
                return Err(Error::DimensionMismatch(format!(
                    "record has {} forecasts, window holds {}",
                    record.forecasts.len(),
                    first.forecasts.len()
                )));
            }
        }
        if !record.observation.is_finite() {
            return Err(Error::NonFinite("window observation".into()));
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Models per record, or `None` while empty.
    pub fn n_models(&self) -> Option<usize> {
        self.records.front().map(|r| r.forecasts.len())
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = &PerformanceRecord> {
        self.records.iter()
    }
}
