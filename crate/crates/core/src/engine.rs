//! The surprise-minimizing update engine.
//!
//! Given a belief `pi` and a datum X, the updated belief is the geometric
//! mixture `q_gamma ∝ p(X|theta)^gamma pi(theta)^(1-gamma)`: the minimizer of
//! the post-update surprise over all beliefs q with `KL(q||pi) <= B`. The
//! trust-region radius B is tied to the surprise of the datum through
//!
//! ```text
//! B = m S / (1 + m S) * B_max,    B_max = KL(scaled_likelihood || pi)
//! ```
//!
//! so that surprising data license larger belief changes. The engine is
//! generic over any belief family that can evaluate KL divergences, form the
//! scaled likelihood of an observation, and mix geometrically.

use crate::categorical::{
    confidence_corrected_surprise, kl_categorical, scaled_likelihood, CategoricalBelief,
    LikelihoodRow, SurpriseValue,
};
use crate::error::{Result, SurpriseError};

/// Cap substituted for an infinite `B_max` when the scaled likelihood is not
/// absolutely continuous w.r.t. the belief. Conjugate families never hit
/// this; only categorical beliefs with hard zeros can.
pub const B_MAX_CAP: f64 = 1e6;

/// Engine parameters: the subject's propensity `m` to change its belief, and
/// the bisection stopping rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SmileConfig {
    pub m: f64,
    pub gamma_tolerance: f64,
    pub max_bisection_iters: usize,
}

impl SmileConfig {
    pub fn new(m: f64) -> Result<Self> {
        if !(m >= 0.0) {
            return Err(SurpriseError::InvalidParameter { name: "m", value: m });
        }
        Ok(Self {
            m,
            ..Self::default()
        })
    }
}

impl Default for SmileConfig {
    fn default() -> Self {
        Self {
            m: 0.1,
            gamma_tolerance: 1e-10,
            max_bisection_iters: 200,
        }
    }
}

/// Per-step record of the quantities produced by the update pipeline, in the
/// order they are computed: surprise, B_max, bound, gamma, impact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmileStepDiagnostics {
    pub surprise: SurpriseValue,
    pub b_max: f64,
    pub bound: f64,
    pub gamma: f64,
    pub impact: f64,
    /// True when B_max was infinite and replaced by [`B_MAX_CAP`].
    pub b_max_capped: bool,
}

/// A belief family usable with the generic update engine.
pub trait BeliefFamily: Sized + Clone {
    type Observation;

    /// `KL(self || other)` in nats.
    fn kl(&self, other: &Self) -> Result<f64>;

    /// The normalized likelihood of the observation: the belief a naive
    /// observer would adopt.
    fn scaled_likelihood(&self, obs: &Self::Observation) -> Result<Self>;

    /// The geometric mixture `∝ p(X|theta)^gamma self(theta)^(1-gamma)`.
    /// `gamma = 0` must return `self`; `gamma = 1` the scaled likelihood.
    fn geometric_mix(&self, obs: &Self::Observation, gamma: f64) -> Result<Self>;

    /// Confidence-corrected surprise of the observation under this belief.
    fn surprise(&self, obs: &Self::Observation) -> Result<SurpriseValue> {
        let mut nats = self.kl(&self.scaled_likelihood(obs)?)?;
        if nats < 0.0 {
            nats = 0.0;
        }
        SurpriseValue::new(nats)
    }
}

/// `KL(scaled_likelihood || belief)`: the bound at which the update adopts
/// the scaled likelihood outright. Returns the value and whether it was
/// capped because the divergence is infinite.
pub fn b_max<B: BeliefFamily>(belief: &B, obs: &B::Observation) -> Result<(f64, bool)> {
    let naive = belief.scaled_likelihood(obs)?;
    match naive.kl(belief) {
        Ok(v) => Ok((v, false)),
        Err(SurpriseError::InfiniteDivergence { .. }) => Ok((B_MAX_CAP, true)),
        Err(e) => Err(e),
    }
}

/// Maps surprise to the trust-region radius: `B = mS/(1+mS) * B_max`.
/// Monotone in S, zero at S = 0 or m = 0, saturating at B_max.
pub fn bound_from_surprise(s: SurpriseValue, m: f64, b_max: f64) -> f64 {
    let ms = m * s.nats();
    if ms <= 0.0 {
        return 0.0;
    }
    ms / (1.0 + ms) * b_max
}

/// Solves `KL(q_gamma || belief) = bound` for gamma in [0,1] by bisection.
///
/// `KL(q_gamma||pi)` increases monotonically in gamma, so the root is unique;
/// `bound = 0` gives 0 and `bound >= B_max` gives 1 without iterating.
pub fn solve_gamma<B: BeliefFamily>(
    belief: &B,
    obs: &B::Observation,
    bound: f64,
    config: &SmileConfig,
) -> Result<f64> {
    if bound <= 0.0 {
        return Ok(0.0);
    }
    let (bmax, capped) = b_max(belief, obs)?;
    if bound >= bmax {
        return Ok(1.0);
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut residual = -bound;
    for _ in 0..config.max_bisection_iters {
        let mid = 0.5 * (lo + hi);
        let q = belief.geometric_mix(obs, mid)?;
        residual = q.kl(belief)? - bound;
        if residual.abs() <= config.gamma_tolerance {
            return Ok(mid);
        }
        if residual > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    if capped {
        // With a capped B_max the bound can exceed the supremum of
        // KL(q_gamma||pi) over gamma < 1; every interior gamma is then
        // feasible and the bracket collapses at 1.
        return Ok(hi);
    }
    Err(SurpriseError::SolverDiverged {
        iters: config.max_bisection_iters,
        lo,
        hi,
        residual,
    })
}

/// Surprise reduction `S(X; pi) - S(X; q_gamma)` achieved by the update.
///
/// For the exact geometric-mixture path this equals
/// `(1/gamma) KL(pi||q) + (1/gamma - 1) KL(q||pi)`; the identity is exercised
/// by the self-test suite. Returns 0 at `gamma = 0` where the quotient form
/// is singular.
pub fn impact<B: BeliefFamily>(belief: &B, obs: &B::Observation, gamma: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let updated = belief.geometric_mix(obs, gamma)?;
    let before = belief.surprise(obs)?.nats();
    let after = updated.surprise(obs)?.nats();
    Ok(before - after)
}

/// One full surprise-modulated update. The surprise is evaluated before the
/// belief changes; the returned belief is never more surprised by the same
/// datum than the input belief was.
pub fn smile_step<B: BeliefFamily>(
    belief: &B,
    obs: &B::Observation,
    config: &SmileConfig,
) -> Result<(B, SmileStepDiagnostics)> {
    let surprise = belief.surprise(obs)?;
    let (bmax, b_max_capped) = b_max(belief, obs)?;
    let bound = bound_from_surprise(surprise, config.m, bmax);
    let gamma = solve_gamma(belief, obs, bound, config)?;
    let updated = belief.geometric_mix(obs, gamma)?;
    let impact = if gamma == 0.0 {
        0.0
    } else {
        surprise.nats() - updated.surprise(obs)?.nats()
    };
    Ok((
        updated,
        SmileStepDiagnostics {
            surprise,
            b_max: bmax,
            bound,
            gamma,
            impact,
            b_max_capped,
        },
    ))
}

impl BeliefFamily for CategoricalBelief {
    type Observation = LikelihoodRow;

    fn kl(&self, other: &Self) -> Result<f64> {
        Ok(kl_categorical(self, other)?.nats())
    }

    fn scaled_likelihood(&self, obs: &LikelihoodRow) -> Result<Self> {
        if self.len() != obs.len() {
            return Err(SurpriseError::DimensionMismatch {
                left: self.len(),
                right: obs.len(),
            });
        }
        Ok(scaled_likelihood(obs))
    }

    fn geometric_mix(&self, obs: &LikelihoodRow, gamma: f64) -> Result<Self> {
        smile_update(self, obs, gamma)
    }

    fn surprise(&self, obs: &LikelihoodRow) -> Result<SurpriseValue> {
        confidence_corrected_surprise(self, obs)
    }
}

/// The geometric-mixture update for categorical beliefs,
/// `q_k ∝ p_k^gamma pi_k^(1-gamma)`, evaluated in log space.
pub fn smile_update(
    belief: &CategoricalBelief,
    row: &LikelihoodRow,
    gamma: f64,
) -> Result<CategoricalBelief> {
    if belief.len() != row.len() {
        return Err(SurpriseError::DimensionMismatch {
            left: belief.len(),
            right: row.len(),
        });
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(SurpriseError::InvalidParameter {
            name: "gamma",
            value: gamma,
        });
    }
    if gamma == 0.0 {
        return Ok(belief.clone());
    }
    if gamma == 1.0 {
        return Ok(scaled_likelihood(row));
    }
    // log-space mixture with a max shift, so p^g * pi^(1-g) survives
    // underflow for extreme rows
    let logs: Vec<Option<f64>> = belief
        .weights()
        .iter()
        .zip(row.values())
        .map(|(pi, p)| {
            if *pi > 0.0 && *p > 0.0 {
                Some(gamma * p.ln() + (1.0 - gamma) * pi.ln())
            } else {
                None
            }
        })
        .collect();
    let max = logs
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    if max == f64::NEG_INFINITY {
        return Err(SurpriseError::DegenerateUpdate);
    }
    let raw: Vec<f64> = logs
        .iter()
        .map(|l| l.map_or(0.0, |l| (l - max).exp()))
        .collect();
    CategoricalBelief::from_unnormalized(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn belief(w: &[f64]) -> CategoricalBelief {
        CategoricalBelief::new(w.to_vec()).unwrap()
    }

    fn row(v: &[f64]) -> LikelihoodRow {
        LikelihoodRow::new(v.to_vec()).unwrap()
    }

    #[test]
    fn smile_update_endpoints() {
        let b = belief(&[0.3, 0.7]);
        let r = row(&[0.9, 0.1]);
        assert_eq!(smile_update(&b, &r, 0.0).unwrap(), b);
        let full = smile_update(&b, &r, 1.0).unwrap();
        assert_abs_diff_eq!(full.weights()[0], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn smile_update_geometric_mean() {
        // sqrt(0.8*0.5) / (sqrt(0.8*0.5) + sqrt(0.2*0.5)) = 2/3
        let b = belief(&[0.5, 0.5]);
        let r = row(&[0.8, 0.2]);
        let q = smile_update(&b, &r, 0.5).unwrap();
        assert_abs_diff_eq!(q.weights()[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.weights()[1], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn bound_from_surprise_examples() {
        let s = |v| SurpriseValue::new(v).unwrap();
        assert_eq!(bound_from_surprise(s(0.0), 0.1, 2.0), 0.0);
        assert_eq!(bound_from_surprise(s(10.0), 0.0, 2.0), 0.0);
        assert_abs_diff_eq!(
            bound_from_surprise(s(10.0), 0.1, 2.0),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn b_max_examples() {
        let b = belief(&[0.5, 0.5]);
        let r = row(&[0.8, 0.2]);
        let (v, capped) = b_max(&b, &r).unwrap();
        // 0.8 ln 1.6 + 0.2 ln 0.4 = 0.192744757021757430
        assert_abs_diff_eq!(v, 0.192744757021757430, epsilon = 1e-14);
        assert!(!capped);

        let (v, capped) = b_max(&b, &row(&[0.8, 0.8])).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        assert!(!capped);

        // scaled likelihood puts mass where the belief has none
        let point = belief(&[1.0, 0.0]);
        let (v, capped) = b_max(&point, &row(&[0.5, 0.5])).unwrap();
        assert_eq!(v, B_MAX_CAP);
        assert!(capped);
    }

    #[test]
    fn solve_gamma_endpoints_and_midpoint() {
        let cfg = SmileConfig::default();
        let b = belief(&[0.5, 0.5]);
        let r = row(&[0.8, 0.2]);
        assert_eq!(solve_gamma(&b, &r, 0.0, &cfg).unwrap(), 0.0);
        let (bmax, _) = b_max(&b, &r).unwrap();
        assert_eq!(solve_gamma(&b, &r, bmax, &cfg).unwrap(), 1.0);
        assert_eq!(solve_gamma(&b, &r, bmax + 1.0, &cfg).unwrap(), 1.0);

        let gamma = solve_gamma(&b, &r, bmax / 2.0, &cfg).unwrap();
        assert!(gamma > 0.0 && gamma < 1.0);
        let q = smile_update(&b, &r, gamma).unwrap();
        let kl = kl_categorical(&q, &b).unwrap().nats();
        assert_abs_diff_eq!(kl, bmax / 2.0, epsilon = 1e-8);
    }

    #[test]
    fn solve_gamma_matches_grid_search() {
        let cfg = SmileConfig::default();
        let b = belief(&[0.5, 0.5]);
        let r = row(&[0.8, 0.2]);
        let (bmax, _) = b_max(&b, &r).unwrap();
        let bound = bmax / 2.0;
        let solved = solve_gamma(&b, &r, bound, &cfg).unwrap();

        // independent fine grid over gamma in 1e-5 steps
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=100_000 {
            let g = k as f64 * 1e-5;
            let q = smile_update(&b, &r, g).unwrap();
            let miss = (kl_categorical(&q, &b).unwrap().nats() - bound).abs();
            if miss < best.0 {
                best = (miss, g);
            }
        }
        assert_abs_diff_eq!(solved, best.1, epsilon = 2e-5);
    }

    #[test]
    fn impact_examples() {
        let b = belief(&[0.5, 0.5]);
        let r = row(&[0.8, 0.2]);
        assert_eq!(impact(&b, &r, 0.0).unwrap(), 0.0);

        // gamma = 1: impact equals the pre-update surprise, since the
        // scaled likelihood is zero-surprise for the same datum
        let full = impact(&b, &r, 1.0).unwrap();
        let s = confidence_corrected_surprise(&b, &r).unwrap().nats();
        assert_abs_diff_eq!(full, s, epsilon = 1e-14);
    }

    #[test]
    fn impact_identity_holds() {
        let b = belief(&[0.35, 0.4, 0.25]);
        let r = row(&[0.6, 0.3, 0.1]);
        for &gamma in &[0.3, 0.5, 0.8, 1.0] {
            let direct = impact(&b, &r, gamma).unwrap();
            let q = smile_update(&b, &r, gamma).unwrap();
            let lhs = kl_categorical(&b, &q).unwrap().nats() / gamma
                + (1.0 / gamma - 1.0) * kl_categorical(&q, &b).unwrap().nats();
            assert_abs_diff_eq!(direct, lhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn smile_step_m_zero_is_inert() {
        let cfg = SmileConfig::new(0.0).unwrap();
        let b = belief(&[0.3, 0.7]);
        let r = row(&[0.9, 0.1]);
        let (updated, diag) = smile_step(&b, &r, &cfg).unwrap();
        assert_eq!(updated, b);
        assert_eq!(diag.gamma, 0.0);
        assert_eq!(diag.impact, 0.0);
    }

    #[test]
    fn smile_step_fixed_point_at_scaled_likelihood() {
        let cfg = SmileConfig::default();
        let r = row(&[0.3, 0.5, 0.2]);
        let b = scaled_likelihood(&r);
        let (updated, diag) = smile_step(&b, &r, &cfg).unwrap();
        assert_eq!(diag.gamma, 0.0);
        assert_abs_diff_eq!(diag.surprise.nats(), 0.0, epsilon = 1e-12);
        assert_eq!(updated, b);
    }

    #[test]
    fn smile_step_diagnostics_consistent() {
        let cfg = SmileConfig::default();
        let b = belief(&[0.6, 0.3, 0.1]);
        let r = row(&[0.1, 0.3, 0.6]);
        let (updated, diag) = smile_step(&b, &r, &cfg).unwrap();
        assert!(diag.gamma > 0.0 && diag.gamma < 1.0);
        let ms = cfg.m * diag.surprise.nats();
        assert_abs_diff_eq!(diag.bound, ms / (1.0 + ms) * diag.b_max, epsilon = 1e-12);
        // plausible rule: the datum is no more surprising afterwards
        let after = confidence_corrected_surprise(&updated, &r).unwrap().nats();
        assert!(after <= diag.surprise.nats() + 1e-10);
        assert!(!diag.b_max_capped);
    }

    #[test]
    fn smile_step_capped_support_violation_does_not_hang() {
        let cfg = SmileConfig::default();
        let b = belief(&[1.0, 0.0]);
        let r = row(&[0.5, 0.5]);
        let (updated, diag) = smile_step(&b, &r, &cfg).unwrap();
        assert!(diag.b_max_capped);
        assert_eq!(diag.b_max, B_MAX_CAP);
        // the belief cannot leave its support for gamma < 1, so the point
        // mass either stays or jumps to the scaled likelihood
        assert!(updated.weights()[0] == 1.0 || updated.weights()[0] == 0.5);
    }
}
