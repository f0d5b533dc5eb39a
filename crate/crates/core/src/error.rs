use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cell dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("invalid asymmetry: D1 = {d1} must lie in [1, {}] for D = {dim}", dim.saturating_sub(1))]
    InvalidAsymmetry { dim: usize, d1: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("momentum window width {width} must lie in [1, {dim}]")]
    InvalidWidth { dim: usize, width: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed for D = {dim}, D1 = {d1}, k = {k}: residual {residual:e}")]
    EigenFailure {
        dim: usize,
        d1: usize,
        k: f64,
        residual: f64,
    },

    #[error("depth {depth} exceeds the interval budget (max {max})")]
    Budget { depth: usize, max: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
