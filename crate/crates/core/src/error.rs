use chrono::NaiveDate;
use thiserror::Error;

use crate::power::Power;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong across the governance pipeline.
///
/// [`Error::EnumerationBound`] signals a refused computation (the instance is
/// too large for exhaustive search), every other variant is a validation or
/// input problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("coin amount may not be negative: {0}")]
    NegativeCoins(String),

    #[error("staking coefficient must be positive, got {0}")]
    NonPositiveLambda(String),

    #[error("denominator is zero")]
    ZeroDenominator,

    #[error("not a valid number: {0}")]
    InvalidNumber(String),

    #[error("voting power arithmetic overflow")]
    PowerOverflow,

    #[error("voter {voter} delegates to unknown voter {target}")]
    DanglingDelegation { voter: String, target: String },

    #[error("delegation cycle: {}", members.join(" -> "))]
    DelegationCycle { members: Vec<String> },

    #[error("profile references unknown voter {0}")]
    UnknownVoter(String),

    #[error("voter {voter} lists candidate {candidate} more than once")]
    DuplicateCandidate { voter: String, candidate: String },

    #[error("voter {voter} casts {cast} votes, limit is {limit}")]
    TooManyVotes { voter: String, cast: usize, limit: u32 },

    #[error("voter {voter} allocates {allocated} but holds only {available} ({excess} over)")]
    OverAllocation {
        voter: String,
        allocated: Power,
        available: Power,
        excess: Power,
    },

    #[error("{op} requires the approval voting rule")]
    ApprovalOnly { op: &'static str },

    #[error("priority vector is empty")]
    EmptyPriorityVector,

    #[error("{strategies} resister strategies exceed the enumeration bound of {bound}")]
    EnumerationBound { strategies: u128, bound: u128 },

    #[error("attacker candidate {0} already holds a committee seat")]
    AttackerOverlap(String),

    #[error("leader {0} does not appear in the event log")]
    UnknownLeader(String),

    #[error("voter {voter} unstakes {requested} coins but has only {staked} staked")]
    UnstakeExceedsStake {
        voter: String,
        requested: String,
        staked: String,
    },

    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("line {line}: timestamp goes backwards (re-run with sorting enabled)")]
    OutOfOrder { line: usize },

    #[error("date {0} is outside the dataset range")]
    DateOutOfRange(NaiveDate),

    #[error("range {start}..={end} is outside the log coverage")]
    RangeOutsideLog { start: NaiveDate, end: NaiveDate },

    #[error("snapshots do not line up: {0}")]
    MismatchedSnapshots(String),

    #[error("checksum mismatch for {file}")]
    HashMismatch { file: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Json {
        context: String,
        source: serde_json::Error,
    },
}

impl Error {
    /// True for errors that mean "instance too big", not "input invalid".
    pub fn is_resource_bound(&self) -> bool {
        matches!(self, Error::EnumerationBound { .. })
    }
}
