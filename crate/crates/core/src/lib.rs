//! Dynamic arbitration of probabilistic time-series forecasts.
//!
//! Given per-model quantile forecasts over a horizon, the arbitrator builds a
//! per-timestep mixture distribution by weighted predictive sampling, with
//! weights adapted through forward simulation of a rolling performance
//! window. The crate also provides the hindsight oracle selector, static
//! ensemble baselines, CRPS/MASE scoring and a regime-switching synthetic
//! benchmark.

pub mod arbitration;
pub mod baselines;
pub mod error;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod quantile_dist;
pub mod rng;
pub mod synthetic;

pub use arbitration::{
    run_arbitration, ArbitrationTrace, ArbitratorConfig, TraceStep, WeightingMode, WeightingPath,
};
pub use error::{Error, Result};
pub use model::{
    validate_panel, ForecastPanel, HorizonClass, PanelMeta, PerformanceRecord, PerformanceWindow,
    QuantileForecast, QuantileLevels, RawModelForecasts, RawPanel, WeightVector,
};
pub use oracle::{oracle_select, OracleTrace};
pub use rng::SeedStream;
