use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible range (non-positive mean,
    /// negative dispersion, malformed probability, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested moment/support combination admits no distribution.
    /// The message states which non-emptiness inequality failed.
    #[error("empty ambiguity set: {0}")]
    EmptyAmbiguitySet(String),

    /// A two-point construction produced a support point below zero.
    #[error("negative support point {point} for p = {p}")]
    NegativeSupport { point: f64, p: f64 },

    /// The bound argument lies outside the support interval.
    #[error("xi = {xi} outside [0, {upper}]")]
    XiOutOfRange { xi: f64, upper: f64 },

    /// A moment system on a fixed support produced a probability far
    /// outside [0, 1]; signals a regime misclassification.
    #[error("support {support:?} gives probability {prob}, outside [0, 1]")]
    InfeasibleSupportTriple { support: Vec<f64>, prob: f64 },

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// The enumeration oracle found no feasible candidate distribution.
    #[error("no feasible candidate distribution on the search grid")]
    NoFeasibleCandidate,

    /// Atoms do not form a probability distribution.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
