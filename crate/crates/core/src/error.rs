use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("residual {0} has a non-trivial syndrome")]
    NontrivialResidual(String),

    #[error("fault site {site} out of range (circuit has {count} sites)")]
    SiteOutOfRange { site: usize, count: usize },

    #[error("Pauli {pauli} does not fit a site of arity {arity}")]
    ArityMismatch { pauli: String, arity: usize },

    #[error("ion distance {0} outside 1..=16")]
    DistanceOutOfRange(usize),

    #[error("equilibrium solver did not converge after {iterations} iterations (gradient {gradient:e})")]
    NonConvergence { iterations: usize, gradient: f64 },

    #[error("invalid trap parameters: {0}")]
    InvalidTrap(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("subset component {component} = {value} exceeds {limit}")]
    SubsetComponent { component: &'static str, value: usize, limit: usize },

    #[error("syndrome stream exhausted after {0} rounds")]
    StreamExhausted(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid noise parameter: {0}")]
    InvalidNoise(String),
}

pub type Result<T> = std::result::Result<T, Error>;
