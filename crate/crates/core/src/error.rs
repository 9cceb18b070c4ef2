use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("observed response has zero likelihood under every type with positive belief")]
    ZeroEvidence,

    #[error("policy chose action {action}, which is not valid at turn {turn}")]
    PolicyActionOutOfRange { action: usize, turn: usize },

    #[error("recommendation at turn {turn} is only allowed on the final turn {final_turn}")]
    RecommendBeforeFinalTurn { turn: usize, final_turn: usize },

    #[error("episode is already over at turn {turn}")]
    EpisodeOver { turn: usize },

    #[error("action id {0} is not part of the action alphabet")]
    InvalidAction(usize),

    #[error("trajectory does not come from the {expected} environment")]
    WrongEnvironment { expected: &'static str },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("belief MDP enumeration exceeded the cap of {cap} nodes")]
    StateSpaceCapExceeded { cap: usize },

    #[error("super-arm has {got} arms, expected {expected}")]
    WrongArity { expected: usize, got: usize },

    #[error("identification did not finish within {cap} episodes")]
    BudgetExceeded { cap: usize },

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for this failure: 2 for bad configuration or
    /// malformed input files, 3 for failed verification, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Csv(_) => 2,
            Error::Verification(_) => 3,
            _ => 1,
        }
    }
}
