use thiserror::Error;

use crate::lhv::{Party, QuartetPair, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {party} setting `{name}`")]
    UnknownSetting { party: Party, name: String },

    #[error("setting pair ({alice}, {bob}) is not one of the four quartet pairs")]
    PairOutsideQuartet { alice: String, bob: String },

    #[error("invalid hidden space: {0}")]
    InvalidSpace(String),

    #[error("invalid setting universe: {0}")]
    InvalidUniverse(String),

    #[error("invalid model:\n{0}")]
    InvalidModel(ValidationReport),

    #[error("hidden space must contain at least one point, got {0}")]
    SpaceSize(usize),

    #[error("target correlation {0} lies outside [-1, 1]")]
    TargetOutOfRange(f64),

    #[error("matching tolerance must be positive, got {0}")]
    Tolerance(f64),

    #[error("schedule is empty")]
    EmptySchedule,

    #[error("schedule has {got} entries but {expected} trials were requested")]
    ScheduleLength { expected: usize, got: usize },

    #[error("count must be at least 1")]
    ZeroCount,

    #[error("missing quartet pairs: {}", crate::lhv::pair_list(.0))]
    MissingPairs(Vec<QuartetPair>),

    #[error("stitched components do not share one setting universe")]
    UniverseMismatch,

    #[error("pool is empty")]
    EmptyPool,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
