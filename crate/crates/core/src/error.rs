use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the unit interval.
    #[error("argument {value} is outside the unit interval [0, 1]")]
    Domain { value: f64 },

    /// An inverse was requested for a value the map never attains.
    #[error("target {value} is outside the range [{lo}, {hi}] of the map")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("integration bounds are reversed: a = {a} > b = {b}")]
    ReversedInterval { a: f64, b: f64 },

    #[error("invalid monotone map: {0}")]
    InvalidMap(String),

    #[error("invalid state distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),

    /// The request is well-formed but outside the scope of the requested operation.
    #[error("unsupported request: {0}")]
    Unsupported(String),
}
