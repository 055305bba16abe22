//! Hindsight oracle selection and model-selection diagnostics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arbitration::{forecast_median, ArbitrationTrace};
use crate::error::{Error, Result};
use crate::metrics::{crps_timestep, mean};
use crate::model::{ForecastPanel, HorizonClass, QuantileForecast};

/// Per-timestep argmin-CRPS selections for one panel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleTrace {
    pub series_id: String,
    pub model_names: Vec<String>,
    /// Selected model index per timestep.
    pub selected: Vec<usize>,
    /// `crps[t][i]`: CRPS of model `i` at timestep `t`.
    pub crps: Vec<Vec<f64>>,
    /// Share of timesteps each model was selected.
    pub frequency: Vec<f64>,
    pub switches: usize,
    /// `switches / (T - 1)`, zero when `T = 1`.
    pub switch_fraction: f64,
}

impl OracleTrace {
    pub fn horizon(&self) -> usize {
        self.selected.len()
    }

    /// Mean over timesteps of the minimal per-model CRPS.
    pub fn oracle_crps(&self) -> f64 {
        let best: Vec<f64> = self
            .selected
            .iter()
            .zip(&self.crps)
            .map(|(&i, row)| row[i])
            .collect();
        mean(&best)
    }

    /// The selected forecast at every timestep.
    pub fn selected_forecasts(&self, panel: &ForecastPanel) -> Vec<QuantileForecast> {
        self.selected
            .iter()
            .enumerate()
            .map(|(t, &i)| panel.models()[i].steps[t].clone())
            .collect()
    }
}

/// Index of the smallest value; the lowest index wins ties.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

pub fn oracle_select(panel: &ForecastPanel) -> Result<OracleTrace> {
    let actuals = panel.require_actuals()?;
    let n = panel.n_models();
    let crps: Vec<Vec<f64>> = actuals
        .iter()
        .enumerate()
        .map(|(t, &y)| {
            panel
                .models()
                .iter()
                .map(|m| crps_timestep(&m.steps[t], y))
                .collect()
        })
        .collect();
    let selected: Vec<usize> = crps.iter().map(|row| argmin(row)).collect();
    let mut counts = vec![0usize; n];
    for &i in &selected {
        counts[i] += 1;
    }
    let horizon = selected.len();
    let frequency = counts.iter().map(|&c| c as f64 / horizon as f64).collect();
    let switches = selected.windows(2).filter(|w| w[0] != w[1]).count();
    let switch_fraction = if horizon > 1 {
        switches as f64 / (horizon - 1) as f64
    } else {
        0.0
    };
    Ok(OracleTrace {
        series_id: panel.series_id().to_string(),
        model_names: panel.model_names().into_iter().map(String::from).collect(),
        selected,
        crps,
        frequency,
        switches,
        switch_fraction,
    })
}

pub fn oracle_crps(panel: &ForecastPanel) -> Result<f64> {
    Ok(oracle_select(panel)?.oracle_crps())
}

/// Grouping key for switching statistics.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SwitchGroup {
    pub domain: String,
    pub horizon_class: HorizonClass,
}

/// Mean switch percentage (0–100) per domain × horizon class.
pub fn switching_stats<'a, I>(traces: I) -> Result<BTreeMap<SwitchGroup, f64>>
where
    I: IntoIterator<Item = (SwitchGroup, &'a OracleTrace)>,
{
    let mut groups: BTreeMap<SwitchGroup, Vec<f64>> = BTreeMap::new();
    for (group, trace) in traces {
        groups
            .entry(group)
            .or_default()
            .push(100.0 * trace.switch_fraction);
    }
    if groups.is_empty() {
        return Err(Error::EmptyGroup);
    }
    Ok(groups.into_iter().map(|(g, v)| (g, mean(&v))).collect())
}

/// Sort indices by `key`, ties by index.
fn rank_by<F: Fn(usize) -> f64>(n: usize, key: F) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    order
}

/// Models ranked by descending weight at every timestep.
pub fn synapse_selection_ranking(trace: &ArbitrationTrace) -> Vec<Vec<usize>> {
    trace
        .steps
        .iter()
        .map(|step| {
            let w = step.weights.as_slice();
            rank_by(w.len(), |i| -w[i])
        })
        .collect()
}

/// Models ranked by how close their median is to the ensemble median.
pub fn median_ensemble_implicit_ranking(
    forecasts: &[QuantileForecast],
    ensemble: &QuantileForecast,
) -> Vec<usize> {
    let target = forecast_median(ensemble);
    let medians: Vec<f64> = forecasts.iter().map(forecast_median).collect();
    rank_by(medians.len(), |i| (medians[i] - target).abs())
}

/// Hit counts for Top-k accuracy, kept separately so results can be pooled
/// globally or averaged per group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKCount {
    pub hits: usize,
    pub total: usize,
}

impl TopKCount {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    pub fn merge(self, other: TopKCount) -> TopKCount {
        TopKCount {
            hits: self.hits + other.hits,
            total: self.total + other.total,
        }
    }
}

pub fn topk_selection_count(
    rankings: &[Vec<usize>],
    oracle: &OracleTrace,
    k: usize,
) -> Result<TopKCount> {
    if rankings.len() != oracle.horizon() {
        return Err(Error::Misalignment(format!(
            "{} rankings for {} oracle timesteps",
            rankings.len(),
            oracle.horizon()
        )));
    }
    let n = oracle.model_names.len();
    if k == 0 || k > n {
        return Err(Error::Misalignment(format!("k = {k} outside 1..={n}")));
    }
    let mut hits = 0;
    for (ranking, &best) in rankings.iter().zip(&oracle.selected) {
        if ranking.len() != n {
            return Err(Error::Misalignment(format!(
                "ranking covers {} models, pool has {n}",
                ranking.len()
            )));
        }
        if ranking[..k].contains(&best) {
            hits += 1;
        }
    }
    Ok(TopKCount {
        hits,
        total: rankings.len(),
    })
}

/// Fraction of timesteps at which the oracle's choice is in the top `k`.
pub fn topk_selection_accuracy(
    rankings: &[Vec<usize>],
    oracle: &OracleTrace,
    k: usize,
) -> Result<f64> {
    topk_selection_count(rankings, oracle, k).map(|c| c.accuracy())
}

/// Pooled accuracy over all timesteps of all groups.
pub fn pooled_topk_accuracy<I: IntoIterator<Item = TopKCount>>(counts: I) -> f64 {
    counts
        .into_iter()
        .fold(TopKCount::default(), TopKCount::merge)
        .accuracy()
}

/// Unweighted mean of per-group accuracies.
pub fn grouped_topk_accuracy<I: IntoIterator<Item = TopKCount>>(counts: I) -> f64 {
    let accs: Vec<f64> = counts
        .into_iter()
        .filter(|c| c.total > 0)
        .map(|c| c.accuracy())
        .collect();
    if accs.is_empty() {
        0.0
    } else {
        mean(&accs)
    }
}
