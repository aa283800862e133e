use thiserror::Error;

/// Errors produced by the solver, the oracle, the harness, and dataset ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected dim={expected}, got dim={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("points must have at least one coordinate")]
    ZeroDimension,

    #[error("non-finite coordinate {value} at position {position}")]
    NonFinite { position: usize, value: f64 },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank {rank} out of range for {n} choose {m} (= {count})")]
    RankOutOfRange { n: usize, m: usize, rank: u128, count: u128 },

    #[error("pop on an empty distance cache")]
    EmptyCache,

    #[error("search refused: estimated {estimate} leaves exceeds the budget of {budget}")]
    BudgetExceeded { estimate: String, budget: u64 },

    #[error("oracle refused: n={n} exceeds the exhaustive-search cap of {cap} points")]
    OracleCap { n: usize, cap: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that reject a request as too expensive rather than malformed.
    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. } | Error::OracleCap { .. })
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
