use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length {0} outside support")]
    LengthOutsideSupport(u32),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("gammas must be non-decreasing in length (length {length}: {previous} > {current})")]
    NonMonotoneGammas {
        length: u32,
        previous: f64,
        current: f64,
    },

    #[error("base distribution has non-contiguous support")]
    NonContiguousSupport,

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("empty value support")]
    EmptyValueSupport,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mismatched length supports")]
    MismatchedSupports,

    #[error("invalid tail function: P[V >= {higher}] = {higher_tail} exceeds P[V >= {lower}] = {lower_tail} (length {length}, state {state})")]
    InvalidTail {
        length: u32,
        state: u32,
        lower: f64,
        higher: f64,
        lower_tail: f64,
        higher_tail: f64,
    },

    #[error("policy shape mismatch: {0}")]
    PolicyShape(String),

    #[error("instance too large for exhaustive search: {size} candidate policies (limit {limit})")]
    InstanceTooLarge { size: f64, limit: u64 },

    #[error("policy is not monotone in length ({violations} violations); apply project_monotone first")]
    NonMonotonePolicy { violations: usize },

    #[error("probe plan is missing the pair (price {value}, state {state})")]
    MissingProbePair { value: f64, state: u32 },

    #[error("no estimate for (length {length}, price {value}, state {state})")]
    NotEstimated { length: u32, value: f64, state: u32 },
}
