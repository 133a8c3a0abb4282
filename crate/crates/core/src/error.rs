use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("operands live on different grids ({left} vs {right}); resample explicitly")]
    GridMismatch { left: String, right: String },

    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("sample {index} is not finite")]
    NonFinite { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "degenerate step equation: 1 + dt*K(0)/2 = {diagonal:e}; \
         use a step smaller than {max_step:e} so the implicit diagonal stays away from zero"
    )]
    DegenerateStep { diagonal: f64, max_step: f64 },

    #[error("time {time} is not a node of the grid (dt = {dt})")]
    OffGrid { time: f64, dt: f64 },

    #[error("exponents must be distinct; {value} appears more than once")]
    DuplicateExponent { value: f64 },

    #[error(
        "Gram matrix is not positive definite at {bits} bits (pivot {pivot} = {value:e}, \
         condition estimate {condition:e}); retry with more precision"
    )]
    NotPositiveDefinite {
        bits: u32,
        pivot: usize,
        value: f64,
        condition: f64,
    },

    #[error("residual {residual:e} exceeds tolerance {tolerance:e} at {bits} bits")]
    ResidualTooLarge {
        bits: u32,
        residual: f64,
        tolerance: f64,
    },

    #[error("no precision level up to {max_bits} bits passed the residual check: {last}")]
    PrecisionExhausted { max_bits: u32, last: Box<Error> },

    #[error(
        "resolvent vanishes at T = {horizon} (|R(T)| = {value:e}); the moment asymptotics need \
         R(T) != 0 (pick another T, or a time where the first nonvanishing derivative of R is used)"
    )]
    ResolventVanishes { horizon: f64, value: f64 },

    #[error("transfer function has a repeated pole near {pole}; partial fractions need simple poles")]
    RepeatedPole { pole: String },

    #[error("polynomial root finder did not converge after {iterations} iterations")]
    RootsNotConverged { iterations: usize },
}
