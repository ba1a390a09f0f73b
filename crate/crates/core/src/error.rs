use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("peak price {peak} c/kWh must exceed off-peak price {offpeak} c/kWh, and both must be positive")]
    PriceOrdering { peak: String, offpeak: String },

    #[error("capital cost {capital} c/kWh/day exceeds the arbitrage price {arbitrage} c/kWh: storage can never pay for itself")]
    Viability { capital: String, arbitrage: String },

    #[error("capital cost {0} c/kWh/day is negative")]
    NegativeCapitalCost(String),

    #[error("coalition is empty")]
    EmptyCoalition,

    #[error("consumer index {index} is outside the population of {n}")]
    UnknownConsumer { index: usize, n: usize },

    #[error("empirical distribution has no samples")]
    EmptyDistribution,

    #[error("no sample day satisfies the conditioning event (threshold {threshold} kWh)")]
    EmptyConditioningEvent { threshold: String },

    #[error("consumer {consumer} has constant consumption; correlation is undefined")]
    DegenerateVariance { consumer: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{n} players exceed the enumeration cap of {max} (2^n coalition evaluations)")]
    TooManyPlayers { n: usize, max: usize },

    #[error("total expected cost is zero; the proportional split is undefined")]
    ZeroTotalExpectedCost,

    #[error("allocation history is empty")]
    EmptyHistory,

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("no days remain after applying the calendar filter")]
    EmptyAfterFilter,

    #[error("correlation matrix is not positive semidefinite")]
    NonPsdCorrelation,

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("report is missing the `{0}` section")]
    MissingSection(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
