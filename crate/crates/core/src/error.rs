use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("prime {p} divides the index [O : Z[theta]] of field {field}")]
    NonMonogenicPrime { field: String, p: u64 },

    #[error("minimal polynomial of {0} is reducible over the rationals")]
    ReduciblePolynomial(String),

    #[error("{what}: size {size} exceeds capacity {cap}")]
    CapacityExceeded { what: String, size: u128, cap: u128 },

    #[error("operation requires a local ring (single prime-power modulus)")]
    NotLocalRing,

    #[error("operands live in different rings")]
    RingMismatch,

    #[error("field {0} has degree 4 but declares no subfield list")]
    MissingSubfieldData(String),

    #[error("level profile of the subring is not constant")]
    ProfileNotConstant,

    #[error("operation requires exact rational weights")]
    ExactModeRequired,

    #[error("density window admits no set sizes")]
    NoAdmissibleSets,

    #[error("set of size {size} is not denser than q^(1-gamma) = {bound:.3}")]
    DensityTooLow { size: usize, bound: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Invalid(msg.into()))
}
