use alloc::string::String;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("chain length {length} outside supported range {min}..={max}")]
    LengthOutOfRange { length: usize, min: usize, max: usize },

    #[error("bitstring length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid bitstring {0:?}: expected only '0' and '1'")]
    ParseBitString(String),

    #[error("state {state} violates the blockade constraint at sites {sites:?} (site 0 is the rightmost character)")]
    BlockadeViolation { state: String, sites: alloc::vec::Vec<(usize, usize)> },

    #[error("state {0} is not in the constrained basis")]
    NotInBasis(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("distribution is not normalized (total weight {total})")]
    Unnormalized { total: f64 },

    #[error("error rate {0} outside [0, 0.5)")]
    ErrorRateOutOfRange(f64),

    #[error("radii t1={t1}, t2={t2} invalid (need 1 <= t1 < t2 <= {max})")]
    RadiiOutOfRange { t1: u32, t2: u32, max: u32 },

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("success probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("every scale is degenerate for {0}")]
    AllScalesDegenerate(String),

    #[error("eigendecomposition did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
