use thiserror::Error;

use crate::group::GroupElement;

/// Errors raised while constructing or evaluating cotranslations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An element or argument does not belong to the group it was used with.
    #[error("usage error: {0}")]
    Usage(String),

    /// Operands of incompatible dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    /// A matrix is outside GL_d at the requested tolerance.
    #[error("singular matrix: sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e}")]
    Singular { sigma_min: f64, sigma_max: f64 },

    /// Malformed input that cannot be evaluated (bad relation, overflow window, ...).
    #[error("spec error: {0}")]
    Spec(String),

    /// Argument outside the sampled grid of a continuous-time object.
    #[error("grid range error: index {index} outside [{lo}, {hi}]")]
    Range { index: i64, lo: i64, hi: i64 },

    /// Integration or evaluation produced non-finite values.
    #[error("numerical divergence: {0}")]
    Divergence(String),

    /// A constructor's precondition failed on the verification window.
    #[error("construction failed: law `{law}` residual {residual:e} exceeds {tolerance:e} at {location:?}")]
    Construction {
        law: String,
        residual: f64,
        tolerance: f64,
        location: Vec<GroupElement>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
