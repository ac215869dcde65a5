use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("behavior catalog needs at least two behaviors, got {0}")]
    CatalogTooSmall(usize),
    #[error("behavior id must be non-empty")]
    EmptyBehaviorId,
    #[error("duplicate behavior id {0:?}")]
    DuplicateBehavior(String),
    #[error("unknown behavior {0:?}")]
    UnknownBehavior(String),
    #[error("distribution is missing behavior {0:?}")]
    MissingBehavior(String),
    #[error("negative probability {value} for behavior {id:?}")]
    NegativeProbability { id: String, value: f64 },
    #[error("probabilities sum to {sum}, outside 1 ± {tolerance}")]
    SumOutOfTolerance { sum: f64, tolerance: f64 },
    #[error("probability for behavior {0:?} is not finite")]
    NonFiniteProbability(String),
    #[error("all probabilities are zero")]
    ZeroSum,
    #[error("distribution has {got} entries but the catalog has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid guidance config: {0}")]
    InvalidConfig(&'static str),
    #[error("guided subset size {n} out of range 1..={max}")]
    SubsetSizeOutOfRange { n: usize, max: usize },
    #[error("bias strength must be non-negative, got {0}")]
    NegativeGamma(f64),
    #[error("null hit probability {0} is degenerate")]
    DegenerateNull(f64),
    #[error("trace rounds must run 1..N without gaps (expected round {expected}, found {found:?})")]
    NonContiguousRounds { expected: u64, found: Option<u64> },
    #[error("memory record for round {got} cannot follow {len} records")]
    RoundMismatch { len: usize, got: u64 },
    #[error("action for {action:?} does not match selected behavior {selected:?}")]
    ActionMismatch { selected: String, action: String },
    #[error("unknown persona profile {0:?}")]
    UnknownProfile(String),
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error("generator failed in round {round} after {completed} completed rounds: {source}")]
    Generator {
        round: u64,
        completed: usize,
        source: GeneratorError,
    },
}

/// Failure reported by a [`Generator`](crate::Generator) implementation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("malformed response after {attempts} attempts: {last}")]
    MalformedResponseAfterRetries { attempts: u32, last: String },
    #[error(transparent)]
    Invalid(#[from] Box<Error>),
    #[error("{0}")]
    Other(String),
}

impl From<Error> for GeneratorError {
    fn from(e: Error) -> Self {
        GeneratorError::Invalid(Box::new(e))
    }
}
