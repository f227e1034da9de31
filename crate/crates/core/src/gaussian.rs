//! Closed-form surprise-minimizing updates for Gaussian beliefs over an
//! unknown mean with known observation variance.
//!
//! With the belief variance pinned to the observation variance, the update
//! collapses to a delta rule with an adaptive weight: the surprise is the
//! squared normalized prediction error, `gamma = sqrt(mS/(1+mS))`, and the
//! new mean is `gamma X + (1-gamma) mu`.

use crate::categorical::SurpriseValue;
use crate::engine::{BeliefFamily, SmileStepDiagnostics};
use crate::error::{Result, SurpriseError};

/// Normal belief over an unknown mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    mean: f64,
    variance: f64,
}

impl GaussianBelief {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !variance.is_finite() || variance <= 0.0 {
            return Err(SurpriseError::InvalidParameter {
                name: "variance",
                value: variance,
            });
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// One observed sample with its known observation variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianObservation {
    pub value: f64,
    obs_variance: f64,
}

impl GaussianObservation {
    pub fn new(value: f64, obs_variance: f64) -> Result<Self> {
        if !obs_variance.is_finite() || obs_variance <= 0.0 {
            return Err(SurpriseError::InvalidParameter {
                name: "obs_variance",
                value: obs_variance,
            });
        }
        Ok(Self {
            value,
            obs_variance,
        })
    }

    pub fn obs_variance(&self) -> f64 {
        self.obs_variance
    }
}

/// `KL(N(a1, b1sq) || N(a2, b2sq))` in nats:
/// `(a1-a2)^2/(2 b2sq) + (b1sq/b2sq - 1 - ln(b1sq/b2sq))/2`.
pub fn kl_gaussian(a1: f64, b1sq: f64, a2: f64, b2sq: f64) -> f64 {
    let ratio = b1sq / b2sq;
    (a1 - a2).powi(2) / (2.0 * b2sq) + 0.5 * (ratio - 1.0 - ratio.ln())
}

/// Confidence-corrected surprise of a sample: the KL divergence from the
/// belief to the scaled likelihood `N(X, obs_variance)`. With equal
/// variances this is exactly `(X - mean)^2 / (2 obs_variance)`.
pub fn gaussian_surprise(belief: &GaussianBelief, obs: &GaussianObservation) -> SurpriseValue {
    let nats = kl_gaussian(belief.mean, belief.variance, obs.value, obs.obs_variance);
    SurpriseValue::new(nats.max(0.0)).expect("gaussian KL is finite and non-negative")
}

/// Closed-form mixing weight `gamma = sqrt(mS/(1+mS))`, the solution of the
/// trust-region equation in the equal-variance regime.
pub fn gaussian_gamma(s: SurpriseValue, m: f64) -> f64 {
    let ms = m * s.nats();
    if ms <= 0.0 {
        return 0.0;
    }
    (ms / (1.0 + ms)).sqrt()
}

fn mix(belief: &GaussianBelief, obs: &GaussianObservation, gamma: f64) -> GaussianBelief {
    if gamma <= 0.0 {
        return *belief;
    }
    if gamma >= 1.0 {
        return GaussianBelief {
            mean: obs.value,
            variance: obs.obs_variance,
        };
    }
    // weighted product of N(X, obs_var/gamma) and N(mean, var/(1-gamma))
    let w = gamma * belief.variance / ((1.0 - gamma) * obs.obs_variance + gamma * belief.variance);
    let variance = 1.0 / (gamma / obs.obs_variance + (1.0 - gamma) / belief.variance);
    GaussianBelief {
        mean: w * obs.value + (1.0 - w) * belief.mean,
        variance,
    }
}

/// One surprise-modulated update of a Gaussian belief.
///
/// The general mixture weight reduces to `gamma` itself when the belief
/// variance equals the observation variance, and that variance is then a
/// fixed point of the update.
pub fn gaussian_smile_step(
    belief: &GaussianBelief,
    obs: &GaussianObservation,
    m: f64,
) -> (GaussianBelief, SmileStepDiagnostics) {
    let surprise = gaussian_surprise(belief, obs);
    let b_max = kl_gaussian(obs.value, obs.obs_variance, belief.mean, belief.variance);
    let gamma = gaussian_gamma(surprise, m);
    let ms = m * surprise.nats();
    let bound = if ms <= 0.0 {
        0.0
    } else {
        ms / (1.0 + ms) * b_max
    };
    let updated = mix(belief, obs, gamma);
    let impact = if gamma == 0.0 {
        0.0
    } else {
        surprise.nats() - gaussian_surprise(&updated, obs).nats()
    };
    (
        updated,
        SmileStepDiagnostics {
            surprise,
            b_max,
            bound,
            gamma,
            impact,
            b_max_capped: false,
        },
    )
}

impl BeliefFamily for GaussianBelief {
    type Observation = GaussianObservation;

    fn kl(&self, other: &Self) -> Result<f64> {
        Ok(kl_gaussian(
            self.mean,
            self.variance,
            other.mean,
            other.variance,
        ))
    }

    fn scaled_likelihood(&self, obs: &GaussianObservation) -> Result<Self> {
        Ok(GaussianBelief {
            mean: obs.value,
            variance: obs.obs_variance,
        })
    }

    fn geometric_mix(&self, obs: &GaussianObservation, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(SurpriseError::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        Ok(mix(self, obs, gamma))
    }

    fn surprise(&self, obs: &GaussianObservation) -> Result<SurpriseValue> {
        Ok(gaussian_surprise(self, obs))
    }
}
