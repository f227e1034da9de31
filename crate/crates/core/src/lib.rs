//! Surprise-modulated online learning.
//!
//! The central quantity is the confidence-corrected surprise of a datum: the
//! KL divergence from the subject's current belief over models to the
//! normalized likelihood of the datum. The surprise sets a trust-region
//! radius for how far the belief may move, and the resulting update is a
//! geometric mixture between the old belief and the datum's scaled
//! likelihood. High surprise shifts the balance toward new information, so a
//! learner adapts quickly after structural changes in the environment
//! without modeling the environment's temporal statistics.
//!
//! The crate provides:
//!
//! - [`categorical`]: surprise measures over finite model sets, plus the
//!   Shannon/Bayesian surprise decomposition of the expected
//!   log-likelihood.
//! - [`engine`]: the update engine, generic over belief families through
//!   [`engine::BeliefFamily`].
//! - [`gaussian`]: closed forms for Gaussian beliefs over an unknown mean.
//! - [`dirichlet`]: Dirichlet beliefs over per-state transition
//!   probabilities, with in-crate [`special`] functions.
//! - [`baselines`]: a fixed-weight delta rule, a conjugate Bayesian counter
//!   and an online EM estimator of the switching hidden Markov model.
//! - [`environments`]: the Gaussian change-point stream and the switching
//!   maze, fully seeded.

pub mod baselines;
pub mod categorical;
pub mod dirichlet;
pub mod engine;
pub mod environments;
pub mod error;
pub mod gaussian;
pub mod special;

pub use categorical::{CategoricalBelief, LikelihoodRow, SurpriseValue};
pub use engine::{BeliefFamily, SmileConfig, SmileStepDiagnostics};
pub use error::{Result, SurpriseError};
