use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("index must be at least 1, got {0}")]
    ZeroIndex(u64),
    #[error("ratio q = {value} at position {position} is below 2")]
    RatioTooSmall { position: u64, value: i128 },
    #[error("affine tail {slope}*k + {offset} is invalid: {reason}")]
    BadAffineTail { slope: u64, offset: i64, reason: &'static str },
    #[error("periodic tail must be non-empty")]
    EmptyPeriod,
    #[error("multiplier {r} at block {block} lies outside [1, {max}]")]
    MultiplierOutOfRange { block: u64, r: u64, max: u64 },
    #[error("multipliers of block {block} must be strictly increasing and start at 1")]
    MalformedBlock { block: u64 },
    #[error("explicit schedule has no entry for block {0}")]
    MissingBlock(u64),
    #[error("index set must be strictly increasing and start at 1 or later")]
    MalformedIndexSet,
    #[error("orders chain is invalid at position {position}: {reason}")]
    BadOrders { position: usize, reason: &'static str },
    #[error("digit {digit} at index {index} is outside [0, {max}]")]
    DigitOutOfRange { index: u64, digit: i128, max: u64 },
    #[error("digit {index} is unknown: {reason}")]
    UnknownDigit { index: u64, reason: &'static str },
    #[error("operation requires a zero digit tail")]
    NonZeroTail,
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("schedule and expansion are built over different ratio streams")]
    BaseMismatch,
    #[error("index set {0} has no decisive q-classification on the window")]
    Unclassified(String),
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("index set has {have} elements, {need} required")]
    InsufficientElements { have: usize, need: usize },
    #[error("{set} is not a subset of the support (index {index})")]
    NotSubset { set: &'static str, index: u64 },
    #[error("({c}, {q}) lies outside every certificate window")]
    NoCertificate { c: u64, q: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}
