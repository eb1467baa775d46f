use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("probability {value} at index {index} is not a power of 1/2")]
    NonDyadicProbability { index: usize, value: String },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilityVector(String),

    #[error("symbol {symbol} at position {position} is not in the input alphabet")]
    InvalidSymbol { position: i64, symbol: u32 },

    #[error("matching level {level} exceeds the ladder depth cap {cap}")]
    LadderUnavailable { level: usize, cap: usize },

    #[error("leftover mass {0} is not a power of two; induced vectors are not dyadic")]
    NonDyadicMass(String),

    #[error("Markov chain is reducible: {0}")]
    Reducible(String),

    #[error("insufficient coverage at n = {threshold}: {censored} of {trials} trials censored")]
    InsufficientCoverage { threshold: u64, censored: u64, trials: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
