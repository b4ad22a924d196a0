use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` = {value} out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("value {value} outside the domain of `{what}`")]
    DomainError { what: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("proposed rate {rate} exceeds thinning envelope {envelope} at t = {time}")]
    RateBoundViolation {
        rate: f64,
        envelope: f64,
        time: f64,
    },

    #[error("state space of {sites} sites exceeds the dense-generator cap of {cap}")]
    TooLarge { sites: usize, cap: usize },

    #[error("box of size {size} around site {site} leaves the lattice 1..={last}")]
    BoxOutOfRange { site: usize, size: usize, last: usize },

    #[error("time step {dt} violates stability bound {bound}")]
    StabilityError { dt: f64, bound: f64 },

    #[error("solution left [0,1] by {excess} at t = {time}")]
    MaximumPrincipleViolation { excess: f64, time: f64 },

    #[error("field class does not match the regime: {0}")]
    ClassMismatch(String),

    #[error("density within {margin} of {{0,1}}; closed-form inversion requires a margin of {required}")]
    DegenerateDensity { margin: f64, required: f64 },

    #[error("total mass drifts by {drift}, tolerance {tolerance}")]
    MassDriftError { drift: f64, tolerance: f64 },

    #[error("quadratic form is singular")]
    SingularSystem,

    #[error("rate mismatch at event {index}: pre-state gives zero rate")]
    RateMismatch { index: usize },

    #[error("operation not defined for theta = {theta}: {reason}")]
    ThetaRegime { theta: f64, reason: &'static str },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
