use thiserror::Error;

/// Errors raised by state construction, transforms, and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("exact amplitudes with scales 2^(-{0}/2) and 2^(-{1}/2) cannot be added")]
    ScaleMismatch(u32, u32),

    #[error("value not representable in exact arithmetic: {0}")]
    ExactUnrepresentable(&'static str),

    #[error("mode index {index} out of range for registry with {count} modes")]
    ModeOutOfRange { index: usize, count: usize },

    #[error("operation requires states over the same mode registry")]
    RegistryMismatch,

    #[error("tensor product requires states with disjoint occupied modes")]
    OverlappingSupport,

    #[error("parameter {name} = {value} outside {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("transform matrix is not unitary within tolerance")]
    NotUnitary,

    #[error(
        "state-count ceiling exceeded: Hilbert dimension {dim} for {modes} modes and \
         {photons} photons (limit {limit})"
    )]
    ResourceCeiling {
        dim: u128,
        modes: usize,
        photons: u32,
        limit: u128,
    },

    #[error(
        "truncated pair-number weight {remainder:.3e} exceeds {limit:.1e}; \
         raise n_max or allow truncation explicitly"
    )]
    SpdcTruncation { remainder: f64, limit: f64 },

    #[error("post-selection plan was built for a different scheme configuration")]
    PlanMismatch,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
