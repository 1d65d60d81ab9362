//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar function returned NaN or infinity while being probed by
    /// finite differences; the flat coordinate index that was perturbed is
    /// reported.
    #[error("non-finite evaluation while perturbing coordinate {coordinate}")]
    NonFiniteEvaluation { coordinate: usize },

    /// Newton iteration for the velocity `v` with `∂L/∂v = p` did not reach
    /// the residual target; the Lagrangian is not hyperregular near the
    /// queried state.
    #[error(
        "velocity solve did not converge: residual {residual:.3e} after {iterations} iterations"
    )]
    HyperregularityFailure { residual: f64, iterations: usize },

    #[error("operation requires at least one compartment")]
    NoCompartments,

    #[error("temperature magnitude {value:.3e} is below the floor {floor:.1e}")]
    ZeroTemperature { value: f64, floor: f64 },

    #[error("temperature magnitude {value:.3e} is below the floor {floor:.1e} at t = {time}")]
    ZeroTemperatureAt { value: f64, floor: f64, time: f64 },

    #[error("trajectory diverged (non-finite state) at t = {time}")]
    DivergedAt { time: f64 },

    #[error("mole number N_{compartment} crossed zero at t = {time}")]
    NegativeMoles { compartment: usize, time: f64 },

    #[error("metriplectic bracket requires declared linear transport laws")]
    MissingLinearTransport,

    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error(
        "analytic gradient of {name} disagrees with finite differences: \
         relative error {rel_error:.3e} exceeds {tolerance:.1e} at audit state {state_index}"
    )]
    GradientAudit {
        name: String,
        rel_error: f64,
        tolerance: f64,
        state_index: usize,
    },

    #[error("flux matrix is not antisymmetric: max |J + J^T| = {defect:.3e}")]
    FluxNotAntisymmetric { defect: f64 },

    #[error("declared linear transport laws are inconsistent: {detail}")]
    TransportInconsistent { detail: String },

    #[error("{context}: matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemiDefinite {
        context: &'static str,
        min_eigenvalue: f64,
    },

    #[error("invalid Lie algebra structure: {detail}")]
    InvalidAlgebra { detail: String },

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("{0}")]
    Unsupported(&'static str),
}

impl Error {
    /// Attach a time stamp to a temperature-floor violation raised inside an
    /// integration loop.
    pub(crate) fn with_time(self, time: f64) -> Self {
        match self {
            Error::ZeroTemperature { value, floor } => {
                Error::ZeroTemperatureAt { value, floor, time }
            }
            other => other,
        }
    }
}
