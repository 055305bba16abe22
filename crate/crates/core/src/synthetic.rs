//! Regime-switching benchmark with complementary synthetic experts.
//!
//! Each series is a concatenation of regimes with their own level, trend,
//! seasonality and noise, so it carries abrupt structural breaks. Each expert
//! is sharp and unbiased inside the regimes it favours, and biased with
//! inflated dispersion elsewhere, so no single expert is best everywhere.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{
    validate_panel, ForecastPanel, HorizonClass, PanelMeta, QuantileLevels, RawModelForecasts,
    RawPanel,
};
use crate::rng::SeedStream;

/// Standard normal quantiles at the deciles 0.1, ..., 0.9.
pub const DECILE_Z: [f64; 9] = [
    -1.2815515655446004,
    -0.8416212335729143,
    -0.5244005127080407,
    -0.2533471031357997,
    0.0,
    0.2533471031357997,
    0.5244005127080407,
    0.8416212335729143,
    1.2815515655446004,
];

pub const EXPERT_ROSTER: [&str; 6] = [
    "expert_a", "expert_b", "expert_c", "expert_d", "expert_e", "expert_f",
];

const DOMAINS: [&str; 4] = ["energy", "transport", "sales", "web"];

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeSegment {
    /// First absolute index covered by this regime.
    pub start: usize,
    pub level: f64,
    pub slope: f64,
    pub seasonal_amplitude: f64,
    /// Zero disables seasonality.
    pub seasonal_period: usize,
    pub noise_scale: f64,
}

/// Piecewise regime description over `context_len + horizon` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeSpec {
    pub context_len: usize,
    pub horizon: usize,
    pub segments: Vec<RegimeSegment>,
}

impl RegimeSpec {
    pub fn new(context_len: usize, horizon: usize, segments: Vec<RegimeSegment>) -> Result<Self> {
        let len = context_len + horizon;
        if horizon == 0 || context_len == 0 {
            return Err(Error::InvalidArgument(
                "context and horizon must be non-empty".into(),
            ));
        }
        if segments.first().map(|s| s.start) != Some(0) {
            return Err(Error::InvalidArgument(
                "first regime must start at 0".into(),
            ));
        }
        if segments.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::InvalidArgument("regime starts must increase".into()));
        }
        if segments.last().is_some_and(|s| s.start >= len) {
            return Err(Error::InvalidArgument(
                "regime starts past the series end".into(),
            ));
        }
        if segments
            .iter()
            .any(|s| !(s.noise_scale >= 0.0 && s.noise_scale.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "noise scale must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            context_len,
            horizon,
            segments,
        })
    }

    pub fn len(&self) -> usize {
        self.context_len + self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Regime index active at absolute step `t`.
    pub fn regime_at(&self, t: usize) -> usize {
        self.segments.partition_point(|s| s.start <= t) - 1
    }

    /// Noise-free value at absolute step `t`.
    pub fn signal(&self, t: usize) -> f64 {
        let s = &self.segments[self.regime_at(t)];
        let season = if s.seasonal_period > 0 {
            s.seasonal_amplitude * (2.0 * PI * t as f64 / s.seasonal_period as f64).sin()
        } else {
            0.0
        };
        s.level + s.slope * (t - s.start) as f64 + season
    }
}

/// Generate `(context, actuals)` from a regime spec.
pub fn generate_series(spec: &RegimeSpec, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = SeedStream::new(seed).substream(&[b"series"]);
    let series: Vec<f64> = (0..spec.len())
        .map(|t| {
            let z: f64 = rng.sample(StandardNormal);
            let noise = spec.segments[spec.regime_at(t)].noise_scale;
            spec.signal(t) + noise * z
        })
        .collect();
    let actuals = series[spec.context_len..].to_vec();
    let mut context = series;
    context.truncate(spec.context_len);
    (context, actuals)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticExpert {
    pub name: String,
    /// Regime indices in which this expert is accurate.
    pub favored: Vec<usize>,
    /// Forecast spread in units of the regime noise scale.
    pub sharpness: f64,
    /// Median offset applied outside favoured regimes, in series units.
    pub out_of_regime_bias: f64,
    /// Spread multiplier applied outside favoured regimes.
    pub dispersion_inflation: f64,
}

/// Decile forecasts of `expert` for absolute steps `range`, given the full
/// realised series (context followed by actuals).
pub fn expert_quantiles(
    expert: &SyntheticExpert,
    spec: &RegimeSpec,
    series: &[f64],
    range: std::ops::Range<usize>,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if series.len() != spec.len() || range.end > series.len() {
        return Err(Error::LengthMismatch {
            expected: spec.len(),
            actual: series.len(),
        });
    }
    let stream = SeedStream::new(seed);
    range
        .map(|t| {
            let regime = spec.regime_at(t);
            let noise = spec.segments[regime].noise_scale;
            let mut rng =
                stream.substream(&[b"expert", expert.name.as_bytes(), &(t as u64).to_le_bytes()]);
            let jitter: f64 = rng.sample(StandardNormal);
            let spread = expert.sharpness * noise;
            let mut center = series[t] + spread * jitter;
            let mut width = spread;
            if !expert.favored.contains(&regime) {
                center += expert.out_of_regime_bias;
                width *= expert.dispersion_inflation;
            }
            Ok(DECILE_Z.iter().map(|z| center + width * z).collect())
        })
        .collect()
}

/// Horizon forecasts (`T x 9`) of `expert` against the generated actuals.
pub fn expert_forecast(
    expert: &SyntheticExpert,
    spec: &RegimeSpec,
    context: &[f64],
    actuals: &[f64],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if context.len() != spec.context_len || actuals.len() != spec.horizon {
        return Err(Error::LengthMismatch {
            expected: spec.len(),
            actual: context.len() + actuals.len(),
        });
    }
    let series: Vec<f64> = context.iter().chain(actuals).copied().collect();
    expert_quantiles(expert, spec, &series, spec.context_len..spec.len(), seed)
}

/// Parameters of a generated suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub n_panels: usize,
    pub min_experts: usize,
    pub max_experts: usize,
    pub context_len: usize,
    /// Backtest steps included per panel for window seeding.
    pub backtest_len: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(n_panels: usize, seed: u64) -> Self {
        Self {
            n_panels,
            min_experts: 2,
            max_experts: 6,
            context_len: 120,
            backtest_len: 16,
            seed,
        }
    }

    pub fn with_experts(mut self, min: usize, max: usize) -> Self {
        self.min_experts = min;
        self.max_experts = max;
        self
    }
}

pub fn horizon_for(class: HorizonClass) -> usize {
    match class {
        HorizonClass::Short => 12,
        HorizonClass::Medium => 24,
        HorizonClass::Long => 48,
    }
}

const SEASONAL_PERIOD: usize = 12;

fn random_spec<R: Rng>(rng: &mut R, context_len: usize, horizon: usize) -> Result<RegimeSpec> {
    let len = context_len + horizon;
    let n_breaks = rng.random_range(1..=3);
    // Breaks fall in the second half of the context or in the horizon, at
    // least four steps apart.
    let lo = context_len / 2;
    let mut starts: Vec<usize> = Vec::new();
    while starts.len() < n_breaks {
        let s = rng.random_range(lo..len - 2);
        if starts.iter().all(|&o: &usize| o.abs_diff(s) >= 4) {
            starts.push(s);
        }
    }
    starts.sort_unstable();
    starts.insert(0, 0);
    let segments = starts
        .into_iter()
        .map(|start| RegimeSegment {
            start,
            level: rng.random_range(40.0..160.0),
            slope: rng.random_range(-0.3..0.3),
            seasonal_amplitude: rng.random_range(0.0..8.0),
            seasonal_period: SEASONAL_PERIOD,
            noise_scale: rng.random_range(1.0..4.0),
        })
        .collect();
    RegimeSpec::new(context_len, horizon, segments)
}

fn random_experts<R: Rng>(
    rng: &mut R,
    n_experts: usize,
    spec: &RegimeSpec,
) -> Vec<SyntheticExpert> {
    let n_regimes = spec.segments.len();
    let mut favored = vec![Vec::new(); n_experts];
    // Roughly a third of the pool specialises in each regime.
    let per_regime = n_experts.div_ceil(3);
    let mut order: Vec<usize> = (0..n_experts).collect();
    for r in 0..n_regimes {
        order.shuffle(rng);
        for &e in &order[..per_regime] {
            favored[e].push(r);
        }
    }
    // Off-regime experts share one error direction, as models misreading the
    // same structural break would.
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mean_noise = spec.segments.iter().map(|s| s.noise_scale).sum::<f64>() / n_regimes as f64;
    favored
        .into_iter()
        .enumerate()
        .map(|(i, favored)| SyntheticExpert {
            name: EXPERT_ROSTER[i].to_string(),
            favored,
            sharpness: rng.random_range(0.6..1.0),
            out_of_regime_bias: sign * rng.random_range(2.5..5.0) * mean_noise,
            dispersion_inflation: rng.random_range(1.5..2.5),
        })
        .collect()
}

/// One generated panel with the generator state that produced it.
#[derive(Clone, Debug)]
pub struct GeneratedPanel {
    pub panel: ForecastPanel,
    pub spec: RegimeSpec,
    pub experts: Vec<SyntheticExpert>,
}

fn generate_panel(config: &SuiteConfig, index: usize) -> Result<GeneratedPanel> {
    let stream = SeedStream::new(config.seed).child("panel", index as u64);
    let mut rng = stream.substream(&[b"layout"]);
    let class = HorizonClass::ALL[rng.random_range(0..3)];
    let horizon = horizon_for(class);
    let spec = random_spec(&mut rng, config.context_len, horizon)?;
    let n_experts = rng.random_range(config.min_experts..=config.max_experts);
    let experts = random_experts(&mut rng, n_experts, &spec);
    let domain = DOMAINS[rng.random_range(0..DOMAINS.len())];

    let (context, actuals) = generate_series(&spec, stream.seed());
    let series: Vec<f64> = context.iter().chain(&actuals).copied().collect();
    let backtest_len = config.backtest_len.min(config.context_len);
    let expert_seed = stream.child("experts", 0).seed();
    let models = experts
        .iter()
        .map(|e| {
            Ok(RawModelForecasts {
                name: e.name.clone(),
                quantiles: expert_quantiles(
                    e,
                    &spec,
                    &series,
                    spec.context_len..spec.len(),
                    expert_seed,
                )?,
                backtest: expert_quantiles(
                    e,
                    &spec,
                    &series,
                    spec.context_len - backtest_len..spec.context_len,
                    expert_seed,
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let panel = validate_panel(RawPanel {
        series_id: format!("synth-{index:04}"),
        context,
        actuals: Some(actuals),
        horizon,
        seasonality: SEASONAL_PERIOD,
        levels: QuantileLevels::deciles().into(),
        models,
        meta: PanelMeta {
            domain: domain.to_string(),
            horizon_class: class,
            frequency: "H".to_string(),
        },
    })?;
    Ok(GeneratedPanel {
        panel,
        spec,
        experts,
    })
}

/// Generate a suite, keeping the regime specs and experts.
pub fn build_suite(config: &SuiteConfig) -> Result<Vec<GeneratedPanel>> {
    if config.min_experts == 0
        || config.min_experts > config.max_experts
        || config.max_experts > EXPERT_ROSTER.len()
    {
        return Err(Error::InvalidArgument(format!(
            "expert count range {}..={} must lie in 1..={}",
            config.min_experts,
            config.max_experts,
            EXPERT_ROSTER.len()
        )));
    }
    if config.context_len < SEASONAL_PERIOD + 1 {
        return Err(Error::InvalidArgument(
            "context too short for the seasonal period".into(),
        ));
    }
    (0..config.n_panels)
        .map(|i| generate_panel(config, i))
        .collect()
}

/// `n_panels` panels with 2 to 6 experts and mixed horizon classes.
pub fn build_benchmark_suite(n_panels: usize, seed: u64) -> Result<Vec<ForecastPanel>> {
    Ok(build_suite(&SuiteConfig::new(n_panels, seed))?
        .into_iter()
        .map(|g| g.panel)
        .collect())
}
