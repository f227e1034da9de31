//! Error type shared by all belief families and learners.

use thiserror::Error;

/// Errors raised by belief construction, divergence evaluation and the
/// surprise-minimizing update machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurpriseError {
    /// A belief or likelihood row needs at least two components.
    #[error("need at least 2 components, got {0}")]
    TooFewComponents(usize),

    /// Belief weights must be non-negative and sum to one.
    #[error("invalid belief weights: {reason}")]
    InvalidBelief { reason: String },

    /// A likelihood row with no positive entry carries no information and
    /// cannot be normalized.
    #[error("degenerate likelihood: row has no positive entry")]
    DegenerateLikelihood,

    /// Two distributions that should share a dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// KL(p||q) with p_k > 0 where q_k = 0.
    #[error("infinite divergence: mass at index {index} outside the support of the reference")]
    InfiniteDivergence { index: usize },

    /// A model with positive belief weight assigns zero likelihood.
    #[error("infinite surprise: supported model {index} has zero likelihood")]
    InfiniteSurprise { index: usize },

    /// The normalizer of an update vanished.
    #[error("degenerate update: normalizer is zero")]
    DegenerateUpdate,

    /// Bisection did not reach the requested tolerance.
    #[error("gamma solver did not converge after {iters} iterations: bracket [{lo}, {hi}], residual {residual:e}")]
    SolverDiverged {
        iters: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    /// Special functions are defined for positive arguments only.
    #[error("{function} domain error: argument must be positive, got {argument}")]
    Domain {
        function: &'static str,
        argument: f64,
    },

    /// A state id outside 0..n_states, or a forbidden self-transition.
    #[error("invalid state: {reason}")]
    InvalidState { reason: String },

    /// A parameter outside its documented range.
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

pub type Result<T> = std::result::Result<T, SurpriseError>;
