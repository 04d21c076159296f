use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid volatility band [{sigma_min_sq}, {sigma_max_sq}]: need 0 < lower <= upper")]
    InvalidBand { sigma_min_sq: f64, sigma_max_sq: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("CFL violated: dt = {dt:e} exceeds {limit:e} (theta = {theta}, dx = {dx:e}, upper variance = {sigma_max_sq})")]
    Cfl {
        dt: f64,
        limit: f64,
        theta: f64,
        dx: f64,
        sigma_max_sq: f64,
    },

    #[error("non-finite value at layer {layer}, node {node}")]
    NonFinite { layer: usize, node: usize },

    #[error("solution left its growth envelope at layer {layer}: |u| = {value:e} > {bound:e}")]
    BlowUp { layer: usize, value: f64, bound: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("generator check failed: {0}")]
    Generator(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("variance density {a} outside band [{lo}, {hi}]")]
    OutOfBand { a: f64, lo: f64, hi: f64 },

    #[error("grid too coarse: interpolation residual {residual:e} above {threshold:e}")]
    GridTooCoarse { residual: f64, threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
