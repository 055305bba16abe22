//! Experiment orchestration: per-panel scoring of every method, grouped
//! aggregation, selection accuracy, win/loss counts and pool scaling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use synapse_core::arbitration::{initial_window, run_arbitration};
use synapse_core::baselines::{quantile_mean_ensemble, quantile_median_ensemble};
use synapse_core::metrics::{crps_series, mase};
use synapse_core::oracle::{
    grouped_topk_accuracy, median_ensemble_implicit_ranking, oracle_select, pooled_topk_accuracy,
    switching_stats, synapse_selection_ranking, topk_selection_count, SwitchGroup, TopKCount,
};
use synapse_core::{
    ArbitrationTrace, ArbitratorConfig, ForecastPanel, HorizonClass, OracleTrace, PanelMeta,
    QuantileForecast, SeedStream, WeightingMode,
};

use crate::error::{HarnessError, Result};

/// Tolerance under which two scores count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Synapse,
    SynapseStatic,
    Median,
    Mean,
    PerModel,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Synapse,
        Method::SynapseStatic,
        Method::Median,
        Method::Mean,
        Method::PerModel,
        Method::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Synapse => "synapse",
            Method::SynapseStatic => "synapse-static",
            Method::Median => "median",
            Method::Mean => "mean",
            Method::PerModel => "per-model",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownMethod(s.to_string()))
    }
}

/// Parse a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let methods = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Method::from_str)
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(HarnessError::NoMethods);
    }
    Ok(methods)
}

/// Label used in reports for one constituent model.
pub fn model_label(name: &str) -> String {
    format!("model:{name}")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Mean over series within each (domain, frequency, horizon class)
    /// config, then mean over configs.
    #[default]
    PerConfig,
    /// Flat mean over series.
    PerSeries,
}

impl FromStr for Aggregation {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-config" => Ok(Aggregation::PerConfig),
            "per-series" => Ok(Aggregation::PerSeries),
            other => Err(HarnessError::Encode(format!(
                "unknown aggregation `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalConfig {
    pub arbitrator: ArbitratorConfig,
    pub seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
    pub aggregation: Aggregation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: String,
    pub crps: f64,
    /// `None` when the context makes the MASE scale zero.
    pub mase: Option<f64>,
    pub per_timestep_crps: Vec<f64>,
}

/// Everything computed for one panel.
#[derive(Clone, Debug)]
pub struct PanelOutcome {
    pub series_id: String,
    pub meta: PanelMeta,
    pub n_models: usize,
    pub scores: Vec<MethodScore>,
    pub oracle: OracleTrace,
    pub synapse_trace: Option<ArbitrationTrace>,
    /// Top-k hit counts for `k = 1..=n_models`.
    pub synapse_topk: Option<Vec<TopKCount>>,
    pub median_topk: Option<Vec<TopKCount>>,
}

impl PanelOutcome {
    pub fn score(&self, method: &str) -> Option<&MethodScore> {
        self.scores.iter().find(|s| s.method == method)
    }
}

fn score_path(
    label: String,
    forecasts: &[QuantileForecast],
    panel: &ForecastPanel,
    actuals: &[f64],
) -> Result<MethodScore> {
    let crps = crps_series(forecasts, actuals)?;
    let points = forecasts
        .iter()
        .map(QuantileForecast::median)
        .collect::<synapse_core::Result<Vec<_>>>()?;
    let mase = match mase(&points, actuals, panel.context(), panel.seasonality()) {
        Ok(v) => Some(v),
        Err(synapse_core::Error::ZeroDenominator { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(MethodScore {
        method: label,
        crps: crps.crps,
        mase,
        per_timestep_crps: crps.per_timestep,
    })
}

fn topk_counts(rankings: &[Vec<usize>], oracle: &OracleTrace) -> Result<Vec<TopKCount>> {
    (1..=oracle.model_names.len())
        .map(|k| Ok(topk_selection_count(rankings, oracle, k)?))
        .collect()
}

fn arbitrate(
    panel: &ForecastPanel,
    arbitrator: &ArbitratorConfig,
    seed: u64,
) -> Result<ArbitrationTrace> {
    let window = initial_window(panel, arbitrator.resolved_window(panel.horizon()))?;
    Ok(run_arbitration(
        panel,
        window,
        arbitrator,
        &SeedStream::new(seed),
    )?)
}

fn per_step<F>(panel: &ForecastPanel, combine: F) -> Result<Vec<QuantileForecast>>
where
    F: Fn(&[QuantileForecast]) -> synapse_core::Result<QuantileForecast>,
{
    (0..panel.horizon())
        .map(|t| Ok(combine(&panel.forecasts_at(t))?))
        .collect()
}

/// Score every requested method on one panel.
pub fn evaluate_panel(
    panel: &ForecastPanel,
    methods: &[Method],
    config: &EvalConfig,
) -> Result<PanelOutcome> {
    let actuals = panel.require_actuals()?;
    let oracle = oracle_select(panel)?;
    let mut scores = Vec::new();
    let mut synapse_trace = None;
    let mut synapse_topk = None;
    let mut median_topk = None;

    for &method in methods {
        match method {
            Method::Synapse => {
                let trace = arbitrate(panel, &config.arbitrator, config.seed)?;
                scores.push(score_path(
                    method.to_string(),
                    &trace.forecasts(),
                    panel,
                    actuals,
                )?);
                synapse_topk = Some(topk_counts(&synapse_selection_ranking(&trace), &oracle)?);
                synapse_trace = Some(trace);
            }
            Method::SynapseStatic => {
                let arbitrator = ArbitratorConfig {
                    weighting: WeightingMode::StaticUniform,
                    ..config.arbitrator.clone()
                };
                let trace = arbitrate(panel, &arbitrator, config.seed)?;
                scores.push(score_path(
                    method.to_string(),
                    &trace.forecasts(),
                    panel,
                    actuals,
                )?);
            }
            Method::Median => {
                let path = per_step(panel, quantile_median_ensemble)?;
                let rankings: Vec<Vec<usize>> = path
                    .iter()
                    .enumerate()
                    .map(|(t, ens)| median_ensemble_implicit_ranking(&panel.forecasts_at(t), ens))
                    .collect();
                median_topk = Some(topk_counts(&rankings, &oracle)?);
                scores.push(score_path(method.to_string(), &path, panel, actuals)?);
            }
            Method::Mean => {
                let path = per_step(panel, quantile_mean_ensemble)?;
                scores.push(score_path(method.to_string(), &path, panel, actuals)?);
            }
            Method::PerModel => {
                for m in panel.models() {
                    scores.push(score_path(model_label(&m.name), &m.steps, panel, actuals)?);
                }
            }
            Method::Oracle => {
                let path = oracle.selected_forecasts(panel);
                scores.push(score_path(method.to_string(), &path, panel, actuals)?);
            }
        }
    }
    Ok(PanelOutcome {
        series_id: panel.series_id().to_string(),
        meta: panel.meta().clone(),
        n_models: panel.n_models(),
        scores,
        oracle,
        synapse_trace,
        synapse_topk,
        median_topk,
    })
}

fn run_parallel<T, F>(panels: &[ForecastPanel], workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ForecastPanel) -> Result<T> + Sync,
{
    let job = || {
        panels
            .par_iter()
            .map(|p| {
                f(p).map_err(|e| match e {
                    HarnessError::Core(source) => HarnessError::Panel {
                        series: p.series_id().to_string(),
                        source,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| HarnessError::Encode(e.to_string()))?
            .install(job),
        None => job(),
    }
}

/// Evaluate every panel; outcomes keep the input order.
pub fn evaluate_panels(
    panels: &[ForecastPanel],
    methods: &[Method],
    config: &EvalConfig,
) -> Result<Vec<PanelOutcome>> {
    if methods.is_empty() {
        return Err(HarnessError::NoMethods);
    }
    run_parallel(panels, config.workers, |p| {
        evaluate_panel(p, methods, config)
    })
}

/// One aggregated line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    /// `overall` or `domain:<name>`.
    pub grouping: String,
    /// `all` or a horizon class.
    pub horizon_class: String,
    pub panels: usize,
    pub configs: usize,
    pub crps: f64,
    pub mase: Option<f64>,
    pub mase_panels: usize,
}

type ConfigKey = (String, String, HorizonClass);

fn config_key(meta: &PanelMeta) -> ConfigKey {
    (
        meta.domain.clone(),
        meta.frequency.clone(),
        meta.horizon_class,
    )
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Aggregate `(meta, value)` pairs under the chosen scheme.
fn aggregate_values(items: &[(&PanelMeta, f64)], aggregation: Aggregation) -> f64 {
    match aggregation {
        Aggregation::PerSeries => {
            let values: Vec<f64> = items.iter().map(|(_, v)| *v).collect();
            mean(&values)
        }
        Aggregation::PerConfig => {
            let mut by_config: BTreeMap<ConfigKey, Vec<f64>> = BTreeMap::new();
            for (meta, v) in items {
                by_config.entry(config_key(meta)).or_default().push(*v);
            }
            let config_means: Vec<f64> = by_config.values().map(|v| mean(v)).collect();
            mean(&config_means)
        }
    }
}

fn method_order(label: &str) -> (usize, &str) {
    match Method::from_str(label) {
        Ok(m) => (Method::ALL.iter().position(|x| *x == m).unwrap(), ""),
        Err(_) => (Method::ALL.len(), label),
    }
}

fn build_row(
    method: &str,
    grouping: String,
    horizon_class: String,
    members: &[(&PanelMeta, &MethodScore)],
    aggregation: Aggregation,
) -> ReportRow {
    let crps: Vec<(&PanelMeta, f64)> = members.iter().map(|(m, s)| (*m, s.crps)).collect();
    let mase: Vec<(&PanelMeta, f64)> = members
        .iter()
        .filter_map(|(m, s)| s.mase.map(|v| (*m, v)))
        .collect();
    let configs = members
        .iter()
        .map(|(m, _)| config_key(m))
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    ReportRow {
        method: method.to_string(),
        grouping,
        horizon_class,
        panels: members.len(),
        configs,
        crps: aggregate_values(&crps, aggregation),
        mase: (!mase.is_empty()).then(|| aggregate_values(&mase, aggregation)),
        mase_panels: mase.len(),
    }
}

/// Aggregate panel outcomes into report rows: overall, per horizon class and
/// per domain, for every method label. Rows come out sorted.
pub fn aggregate(outcomes: &[PanelOutcome], aggregation: Aggregation) -> Vec<ReportRow> {
    let mut by_method: BTreeMap<String, Vec<(&PanelMeta, &MethodScore)>> = BTreeMap::new();
    for o in outcomes {
        for s in &o.scores {
            by_method
                .entry(s.method.clone())
                .or_default()
                .push((&o.meta, s));
        }
    }
    let mut rows = Vec::new();
    for (method, members) in &by_method {
        rows.push(build_row(
            method,
            "overall".into(),
            "all".into(),
            members,
            aggregation,
        ));
        for class in HorizonClass::ALL {
            let subset: Vec<_> = members
                .iter()
                .filter(|(m, _)| m.horizon_class == class)
                .copied()
                .collect();
            if !subset.is_empty() {
                rows.push(build_row(
                    method,
                    "overall".into(),
                    class.to_string(),
                    &subset,
                    aggregation,
                ));
            }
        }
        let mut domains: BTreeMap<&str, Vec<(&PanelMeta, &MethodScore)>> = BTreeMap::new();
        for &(m, s) in members {
            domains.entry(m.domain.as_str()).or_default().push((m, s));
        }
        for (domain, subset) in domains {
            rows.push(build_row(
                method,
                format!("domain:{domain}"),
                "all".into(),
                &subset,
                aggregation,
            ));
        }
    }
    sort_rows(&mut rows);
    rows
}

fn class_order(c: &str) -> usize {
    match c {
        "all" => 0,
        "short" => 1,
        "medium" => 2,
        "long" => 3,
        _ => 4,
    }
}

/// Deterministic row order: method registry order (constituent models last,
/// by name), then `overall` before domains, then horizon class.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        method_order(&a.method)
            .cmp(&method_order(&b.method))
            .then_with(|| (a.grouping != "overall").cmp(&(b.grouping != "overall")))
            .then_with(|| a.grouping.cmp(&b.grouping))
            .then_with(|| class_order(&a.horizon_class).cmp(&class_order(&b.horizon_class)))
            .then_with(|| a.horizon_class.cmp(&b.horizon_class))
    });
}

/// Evaluation result: per-panel outcomes and aggregated rows.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub outcomes: Vec<PanelOutcome>,
    pub rows: Vec<ReportRow>,
}

impl Evaluation {
    /// The `overall`/`all` row for `method`.
    pub fn overall(&self, method: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.grouping == "overall" && r.horizon_class == "all")
    }
}

pub fn run_evaluation(
    panels: &[ForecastPanel],
    methods: &[Method],
    config: &EvalConfig,
) -> Result<Evaluation> {
    let outcomes = evaluate_panels(panels, methods, config)?;
    let rows = aggregate(&outcomes, config.aggregation);
    Ok(Evaluation { outcomes, rows })
}

/// Top-k selection accuracy of the arbitrator's weights and of the median
/// ensemble's implicit ranking against the oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionAccuracy {
    /// Accuracy for `k = 1..=len`, pooled over every timestep.
    pub synapse: Vec<f64>,
    pub median: Vec<f64>,
    /// Mean over domains of the per-domain pooled accuracy.
    pub synapse_by_domain: Vec<f64>,
    pub median_by_domain: Vec<f64>,
}

/// Accuracy for `k` up to the largest pool. Panels with fewer than `k`
/// models count their full pool, which always contains the oracle's choice.
pub fn selection_accuracy(outcomes: &[PanelOutcome]) -> Result<SelectionAccuracy> {
    let k_max = outcomes.iter().map(|o| o.n_models).max().unwrap_or(0);
    let counts_at = |counts: &Option<Vec<TopKCount>>, k: usize, name: &str| -> Result<TopKCount> {
        let c = counts
            .as_ref()
            .ok_or_else(|| HarnessError::MissingMethod(name.to_string()))?;
        Ok(c[k.min(c.len()) - 1])
    };
    let mut acc = SelectionAccuracy {
        synapse: vec![],
        median: vec![],
        synapse_by_domain: vec![],
        median_by_domain: vec![],
    };
    for k in 1..=k_max {
        let mut syn = Vec::new();
        let mut med = Vec::new();
        let mut syn_dom: BTreeMap<&str, TopKCount> = BTreeMap::new();
        let mut med_dom: BTreeMap<&str, TopKCount> = BTreeMap::new();
        for o in outcomes {
            let s = counts_at(&o.synapse_topk, k, "synapse")?;
            let m = counts_at(&o.median_topk, k, "median")?;
            syn.push(s);
            med.push(m);
            let d = o.meta.domain.as_str();
            syn_dom.insert(d, syn_dom.get(d).copied().unwrap_or_default().merge(s));
            med_dom.insert(d, med_dom.get(d).copied().unwrap_or_default().merge(m));
        }
        acc.synapse.push(pooled_topk_accuracy(syn));
        acc.median.push(pooled_topk_accuracy(med));
        acc.synapse_by_domain
            .push(grouped_topk_accuracy(syn_dom.into_values()));
        acc.median_by_domain
            .push(grouped_topk_accuracy(med_dom.into_values()));
    }
    Ok(acc)
}

/// One line of the Top-k accuracy table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKRow {
    pub k: usize,
    pub synapse: f64,
    pub median: f64,
    pub synapse_by_domain: f64,
    pub median_by_domain: f64,
}

impl SelectionAccuracy {
    pub fn rows(&self) -> Vec<TopKRow> {
        (0..self.synapse.len())
            .map(|i| TopKRow {
                k: i + 1,
                synapse: self.synapse[i],
                median: self.median[i],
                synapse_by_domain: self.synapse_by_domain[i],
                median_by_domain: self.median_by_domain[i],
            })
            .collect()
    }
}

/// Oracle switching percentage for one domain and horizon class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchRow {
    pub domain: String,
    pub horizon_class: String,
    pub panels: usize,
    pub switch_percent: f64,
}

pub fn switching_rows(outcomes: &[PanelOutcome]) -> Result<Vec<SwitchRow>> {
    let group = |o: &PanelOutcome| SwitchGroup {
        domain: o.meta.domain.clone(),
        horizon_class: o.meta.horizon_class,
    };
    let stats = switching_stats(outcomes.iter().map(|o| (group(o), &o.oracle)))?;
    Ok(stats
        .into_iter()
        .map(|(g, pct)| SwitchRow {
            panels: outcomes.iter().filter(|o| group(o) == g).count(),
            domain: g.domain,
            horizon_class: g.horizon_class.to_string(),
            switch_percent: pct,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinLoss {
    pub metric: String,
    pub method_a: String,
    pub method_b: String,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

fn tally(pairs: impl Iterator<Item = (f64, f64)>) -> (usize, usize, usize) {
    let (mut w, mut l, mut t) = (0, 0, 0);
    for (a, b) in pairs {
        if (a - b).abs() <= TIE_TOLERANCE {
            t += 1;
        } else if a < b {
            w += 1;
        } else {
            l += 1;
        }
    }
    (w, l, t)
}

/// Per-panel wins, losses and ties of `method_a` against `method_b` on CRPS
/// and MASE (lower is better). Panels without a defined MASE are skipped
/// for that metric.
pub fn win_loss(outcomes: &[PanelOutcome], method_a: &str, method_b: &str) -> Result<Vec<WinLoss>> {
    let mut pairs = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let a = o
            .score(method_a)
            .ok_or_else(|| HarnessError::MissingMethod(method_a.to_string()))?;
        let b = o
            .score(method_b)
            .ok_or_else(|| HarnessError::MissingMethod(method_b.to_string()))?;
        pairs.push((a, b));
    }
    let row = |metric: &str, (wins, losses, ties): (usize, usize, usize)| WinLoss {
        metric: metric.to_string(),
        method_a: method_a.to_string(),
        method_b: method_b.to_string(),
        wins,
        losses,
        ties,
    };
    Ok(vec![
        row("crps", tally(pairs.iter().map(|(a, b)| (a.crps, b.crps)))),
        row(
            "mase",
            tally(pairs.iter().filter_map(|(a, b)| Some((a.mase?, b.mase?)))),
        ),
    ])
}

/// Evaluate both methods on `panels` and compare them.
pub fn run_win_loss(
    panels: &[ForecastPanel],
    method_a: &str,
    method_b: &str,
    config: &EvalConfig,
) -> Result<Vec<WinLoss>> {
    let mut methods = Vec::new();
    for label in [method_a, method_b] {
        let m = if label.starts_with("model:") {
            Method::PerModel
        } else {
            Method::from_str(label)?
        };
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let outcomes = evaluate_panels(panels, &methods, config)?;
    win_loss(&outcomes, method_a, method_b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub pool_size: usize,
    pub models: Vec<String>,
    pub synapse_crps: f64,
    pub synapse_mase: Option<f64>,
    pub best_model: String,
    pub best_crps: f64,
    pub best_mase: Option<f64>,
}

/// Arbitrate growing prefixes of `model_order` and compare against the best
/// single model of each prefix pool.
pub fn run_pool_scaling(
    panels: &[ForecastPanel],
    model_order: &[String],
    config: &EvalConfig,
) -> Result<Vec<ScalingRow>> {
    if model_order.len() < 2 {
        return Err(synapse_core::Error::InsufficientModels {
            needed: 2,
            got: model_order.len(),
        }
        .into());
    }
    let mut rows = Vec::new();
    for size in 2..=model_order.len() {
        let pool = &model_order[..size];
        let subsets = panels
            .iter()
            .map(|p| {
                let names = p.model_names();
                let idx = pool
                    .iter()
                    .map(|m| {
                        names.iter().position(|n| n == m).ok_or_else(|| {
                            synapse_core::Error::InvalidArgument(format!(
                                "panel `{}` has no model `{m}`",
                                p.series_id()
                            ))
                        })
                    })
                    .collect::<synapse_core::Result<Vec<_>>>()?;
                Ok(p.select_models(&idx)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let eval = run_evaluation(&subsets, &[Method::Synapse, Method::PerModel], config)?;
        let synapse = eval
            .overall(Method::Synapse.as_str())
            .ok_or_else(|| HarnessError::MissingMethod("synapse".into()))?;
        let best = pool
            .iter()
            .filter_map(|m| eval.overall(&model_label(m)).map(|r| (m, r)))
            .min_by(|a, b| a.1.crps.total_cmp(&b.1.crps))
            .ok_or_else(|| HarnessError::MissingMethod("per-model".into()))?;
        rows.push(ScalingRow {
            pool_size: size,
            models: pool.to_vec(),
            synapse_crps: synapse.crps,
            synapse_mase: synapse.mase,
            best_model: best.0.clone(),
            best_crps: best.1.crps,
            best_mase: best.1.mase,
        });
    }
    Ok(rows)
}

/// Long-format per-step CRPS, averaged over panels, for horizon plots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: String,
    pub horizon_class: String,
    pub step: usize,
    pub panels: usize,
    pub crps: f64,
}

pub fn horizon_curves(outcomes: &[PanelOutcome]) -> Vec<CurvePoint> {
    let mut acc: BTreeMap<(String, HorizonClass, usize), Vec<f64>> = BTreeMap::new();
    for o in outcomes {
        for s in &o.scores {
            for (t, v) in s.per_timestep_crps.iter().enumerate() {
                acc.entry((s.method.clone(), o.meta.horizon_class, t))
                    .or_default()
                    .push(*v);
            }
        }
    }
    let mut points: Vec<CurvePoint> = acc
        .into_iter()
        .map(|((method, class, step), v)| CurvePoint {
            method,
            horizon_class: class.to_string(),
            step,
            panels: v.len(),
            crps: mean(&v),
        })
        .collect();
    points.sort_by(|a, b| {
        method_order(&a.method)
            .cmp(&method_order(&b.method))
            .then(class_order(&a.horizon_class).cmp(&class_order(&b.horizon_class)))
            .then(a.step.cmp(&b.step))
    });
    points
}
