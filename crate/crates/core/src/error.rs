use thiserror::Error;

/// Errors raised by panel construction, scoring and arbitration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid quantile levels: {0}")]
    InvalidLevels(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "non-monotone quantiles for model `{model}` at timestep {timestep}: \
         value at index {upper} is below value at index {lower}"
    )]
    NonMonotoneQuantiles {
        model: String,
        timestep: usize,
        lower: usize,
        upper: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("MASE denominator is zero: the context is constant at lag {seasonality}")]
    ZeroDenominator { seasonality: usize },

    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("degenerate variance: correlation undefined")]
    DegenerateVariance,

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("performance window is empty")]
    EmptyWindow,

    #[error("sample allocation is zero for every model")]
    AllZeroAllocation,

    #[error("backtest forecasts do not align with the context: {0}")]
    AlignmentMismatch(String),

    #[error("panel `{0}` has no actuals")]
    MissingActuals(String),

    #[error("no traces to aggregate")]
    EmptyGroup,

    #[error("misaligned inputs: {0}")]
    Misalignment(String),

    #[error("need at least {needed} models, got {got}")]
    InsufficientModels { needed: usize, got: usize },

    #[error("quantile levels do not contain the median (0.5)")]
    NoMedianLevel,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
