use thiserror::Error;

use crate::model::FlowState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("blow-up detected at t = {}", .0.t)]
    BlowUp(Box<BlowUp>),
}

/// Non-finite coefficients appeared while stepping. Carries the last finite
/// state so callers can keep the partial history.
#[derive(Debug, Clone)]
pub struct BlowUp {
    /// Time at which the non-finite stage was produced.
    pub t: f64,
    pub last_finite: FlowState,
    pub steps: usize,
}
