use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParameter(&'static str),

    #[error("parameter `{0}` must be finite")]
    NonFiniteParameter(&'static str),

    #[error("inverse moment requires 2a > sigma^2 (got 2a = {two_a}, sigma^2 = {sigma_sq})")]
    FellerViolation { two_a: f64, sigma_sq: f64 },

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("drift-implicit square-root scheme needs 4a > sigma^2 (got 4a = {four_a}, sigma^2 = {sigma_sq})")]
    SchemeInadmissible { four_a: f64, sigma_sq: f64 },

    #[error("path has no increments")]
    EmptyPath,

    #[error("checkpoint {0} is not on the time grid")]
    OffGridCheckpoint(f64),

    #[error("checkpoint {checkpoint} lies beyond the path horizon {horizon}")]
    CheckpointOutOfRange { checkpoint: f64, horizon: f64 },

    #[error("checkpoints must be strictly ascending and positive")]
    UnorderedCheckpoints,

    #[error("estimator denominator {0} is degenerate (path constant on the grid)")]
    DegenerateDenominator(f64),

    #[error("inverse statistics unavailable: path reaches the inverse floor")]
    UnreliableInverse,

    #[error("path carries no stored Wiener increments")]
    MissingNoise,

    #[error("estimated mean-reversion rate {0} is too close to zero")]
    ZeroMeanReversion(f64),

    #[error("cannot summarize an empty sample")]
    EmptyInput,

    #[error("every replication failed for cell {0}")]
    AllReplicationsFailed(String),

    #[error("malformed path data: {0}")]
    MalformedPath(String),
}

pub type Result<T> = std::result::Result<T, Error>;
