//! Surprise measures over finite model sets.
//!
//! A subject holds a normalized opinion `pi` over K candidate models. A new
//! datum X enters as the row of likelihoods `p(X|theta_k)`. The
//! confidence-corrected surprise is the KL divergence from the opinion to the
//! scaled likelihood (the posterior a naive observer with a flat prior would
//! form), so it grows both with the datum's unlikeliness and with the
//! subject's commitment to its opinion.

use crate::error::{Result, SurpriseError};

/// Tolerance on the normalization of a belief vector.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A normalized weight vector over K >= 2 models.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalBelief {
    weights: Vec<f64>,
}

impl CategoricalBelief {
    /// Builds a belief from non-negative weights that sum to one
    /// (within [`NORMALIZATION_TOL`]).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(SurpriseError::TooFewComponents(weights.len()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(SurpriseError::InvalidBelief {
                reason: format!("weight {w} is negative or non-finite"),
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(SurpriseError::InvalidBelief {
                reason: format!("weights sum to {sum}, expected 1"),
            });
        }
        Ok(Self { weights })
    }

    /// Normalizes arbitrary non-negative weights into a belief.
    pub fn from_unnormalized(raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(SurpriseError::TooFewComponents(raw.len()));
        }
        if let Some(w) = raw.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(SurpriseError::InvalidBelief {
                reason: format!("weight {w} is negative or non-finite"),
            });
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(SurpriseError::DegenerateUpdate);
        }
        Ok(Self {
            weights: raw.into_iter().map(|w| w / sum).collect(),
        })
    }

    /// The uniform belief over `k` models.
    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(SurpriseError::TooFewComponents(k));
        }
        Ok(Self {
            weights: vec![1.0 / k as f64; k],
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Likelihoods `p(X|theta_k)` of one observed datum under each of K models.
///
/// The values need not sum to one: they are K evaluations of different
/// models at the same datum, not a distribution over k.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodRow {
    values: Vec<f64>,
}

impl LikelihoodRow {
    /// Builds a row of non-negative likelihoods with at least one positive
    /// entry.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(SurpriseError::TooFewComponents(values.len()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(SurpriseError::InvalidBelief {
                reason: format!("likelihood {v} is negative or non-finite"),
            });
        }
        if !values.iter().any(|v| *v > 0.0) {
            return Err(SurpriseError::DegenerateLikelihood);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sum of the row, `||p_X||`.
    pub fn norm(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// A non-negative surprise in nats.
///
/// KL-based measures are non-negative by construction; raw and Shannon
/// surprise can take any sign and are plain `f64`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SurpriseValue(f64);

impl SurpriseValue {
    /// Wraps a non-negative number of nats. Tiny negative values from
    /// floating-point cancellation are clamped to zero.
    pub fn new(nats: f64) -> Result<Self> {
        if !nats.is_finite() || nats < -1e-9 {
            return Err(SurpriseError::InvalidParameter {
                name: "surprise_nats",
                value: nats,
            });
        }
        Ok(Self(nats.max(0.0)))
    }

    pub fn nats(self) -> f64 {
        self.0
    }
}

/// Normalizes a likelihood row over models: the posterior under a flat prior.
pub fn scaled_likelihood(row: &LikelihoodRow) -> CategoricalBelief {
    let sum = row.norm();
    CategoricalBelief {
        weights: row.values.iter().map(|v| v / sum).collect(),
    }
}

/// Shannon entropy `H = -sum pi ln pi` in nats, with `0 ln 0 := 0`.
pub fn entropy(belief: &CategoricalBelief) -> f64 {
    belief
        .weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| -w * w.ln())
        .sum()
}

/// `KL(p||q) = sum p ln(p/q)`, requiring q to dominate p.
pub fn kl_categorical(p: &CategoricalBelief, q: &CategoricalBelief) -> Result<SurpriseValue> {
    if p.len() != q.len() {
        return Err(SurpriseError::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut sum = 0.0;
    for (index, (pk, qk)) in p.weights.iter().zip(&q.weights).enumerate() {
        if *pk > 0.0 {
            if *qk <= 0.0 {
                return Err(SurpriseError::InfiniteDivergence { index });
            }
            sum += pk * (pk / qk).ln();
        }
    }
    SurpriseValue::new(sum)
}

/// Confidence-corrected surprise: `KL(belief || scaled_likelihood(row))`.
pub fn confidence_corrected_surprise(
    belief: &CategoricalBelief,
    row: &LikelihoodRow,
) -> Result<SurpriseValue> {
    kl_categorical(belief, &scaled_likelihood(row))
}

/// Expected negative log-likelihood under the belief,
/// `-sum pi_k ln p(X|theta_k)`.
pub fn raw_surprise(belief: &CategoricalBelief, row: &LikelihoodRow) -> Result<f64> {
    if belief.len() != row.len() {
        return Err(SurpriseError::DimensionMismatch {
            left: belief.len(),
            right: row.len(),
        });
    }
    let mut sum = 0.0;
    for (index, (pk, v)) in belief.weights.iter().zip(&row.values).enumerate() {
        if *pk > 0.0 {
            if *v <= 0.0 {
                return Err(SurpriseError::InfiniteSurprise { index });
            }
            sum -= pk * v.ln();
        }
    }
    Ok(sum)
}

/// Negative log marginal likelihood `-ln Z`, `Z = sum p(X|theta_k) pi_k`.
pub fn shannon_surprise(belief: &CategoricalBelief, row: &LikelihoodRow) -> Result<f64> {
    let z = marginal_likelihood(belief, row)?;
    if z <= 0.0 {
        return Err(SurpriseError::InfiniteSurprise { index: 0 });
    }
    Ok(-z.ln())
}

/// One step of Bayes' rule: `pi_k <- p(X|theta_k) pi_k / Z`.
pub fn bayes_update(belief: &CategoricalBelief, row: &LikelihoodRow) -> Result<CategoricalBelief> {
    let z = marginal_likelihood(belief, row)?;
    if z <= 0.0 {
        return Err(SurpriseError::DegenerateUpdate);
    }
    Ok(CategoricalBelief {
        weights: belief
            .weights
            .iter()
            .zip(&row.values)
            .map(|(pk, v)| pk * v / z)
            .collect(),
    })
}

/// KL divergence from the prior to the Bayes posterior induced by the datum.
pub fn bayesian_surprise(prior: &CategoricalBelief, row: &LikelihoodRow) -> Result<SurpriseValue> {
    let posterior = bayes_update(prior, row)?;
    kl_categorical(prior, &posterior)
}

fn marginal_likelihood(belief: &CategoricalBelief, row: &LikelihoodRow) -> Result<f64> {
    if belief.len() != row.len() {
        return Err(SurpriseError::DimensionMismatch {
            left: belief.len(),
            right: row.len(),
        });
    }
    Ok(belief
        .weights
        .iter()
        .zip(&row.values)
        .map(|(pk, v)| pk * v)
        .sum())
}
