//! Comparison learners: a constant-weight delta rule, a conjugate-counting
//! Bayesian learner, and an online EM estimator for the two-environment
//! hidden Markov model of the switching maze.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{
    estimate_transition_matrix, DirichletParams, TransitionBeliefTable, TransitionMatrixEstimate,
};
use crate::error::{Result, SurpriseError};

/// Delta rule with a constant mixing weight: `mean <- g x + (1-g) mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedGammaEstimator {
    mean: f64,
    gamma: f64,
}

impl FixedGammaEstimator {
    pub fn new(mean: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(SurpriseError::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        Ok(Self { mean, gamma })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn step(&self, x: f64) -> Self {
        Self {
            mean: self.gamma * x + (1.0 - self.gamma) * self.mean,
            gamma: self.gamma,
        }
    }
}

/// Conjugate Dirichlet-categorical learner over the 240 transition
/// probabilities: one count per observed transition, never discounted, and
/// therefore unaware of environment switches.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesTable {
    table: TransitionBeliefTable,
}

impl NaiveBayesTable {
    pub fn new(n_states: usize) -> Result<Self> {
        Ok(Self {
            table: TransitionBeliefTable::flat(n_states)?,
        })
    }

    pub fn n_states(&self) -> usize {
        self.table.n_states()
    }

    /// Counts (including the all-ones prior) as a Dirichlet belief table.
    pub fn counts(&self) -> &TransitionBeliefTable {
        &self.table
    }

    /// Adds one observation of `s -> s_next` to the posterior.
    pub fn observe(&mut self, s: usize, s_next: usize) -> Result<()> {
        let n = self.table.n_states();
        if s >= n || s_next >= n || s == s_next {
            return Err(SurpriseError::InvalidState {
                reason: format!("invalid transition {s} -> {s_next}"),
            });
        }
        let slot = TransitionBeliefTable::slot_of(s, s_next);
        let mut alpha = self.table.row(s)?.alpha().to_vec();
        alpha[slot] += 1.0;
        self.table.set_row(s, DirichletParams::new(alpha)?);
        Ok(())
    }

    pub fn estimate(&self, eps: f64) -> TransitionMatrixEstimate {
        estimate_transition_matrix(&self.table, eps)
    }
}

/// Online EM state for a hidden Markov model with two environments over
/// `n_states` rooms: estimated switch matrix, per-environment transition
/// tensors, the environment posterior, and the recursive sufficient
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineEmState {
    n_states: usize,
    /// Estimated 2x2 environment switch matrix, row-stochastic.
    p_hat: [[f64; 2]; 2],
    /// Estimated transition tensors, `t_hat[j][s][s']` flattened; each row
    /// `(j, s, .)` is stochastic.
    t_hat: Vec<f64>,
    /// Posterior over the current environment.
    q_hat: [f64; 2],
    /// Sufficient statistics `phi[i][j][s][s'][h]`, flattened.
    phi: Vec<f64>,
    eta: f64,
    step_count: u64,
    burn_in: u64,
    /// Set when the last step's posterior denominator hit the floor.
    last_step_floored: bool,
    floored_steps: u64,
}

/// Floor applied to the one-step predictive probability before division.
const EM_DENOM_FLOOR: f64 = 1e-300;

impl OnlineEmState {
    /// Initializes with symmetric switch beliefs at `switch_hint` off the
    /// diagonal, near-uniform transition rows with 1% seeded multiplicative
    /// jitter (pure uniformity is a symmetric fixed point the posterior
    /// cannot escape), a 50/50 environment posterior and zero statistics.
    pub fn init(
        n_states: usize,
        switch_hint: f64,
        eta: f64,
        burn_in: u64,
        seed: u64,
    ) -> Result<Self> {
        if n_states < 2 {
            return Err(SurpriseError::TooFewComponents(n_states));
        }
        if !(switch_hint > 0.0 && switch_hint < 1.0) {
            return Err(SurpriseError::InvalidParameter {
                name: "switch_hint",
                value: switch_hint,
            });
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(SurpriseError::InvalidParameter {
                name: "eta",
                value: eta,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n_states;
        let mut t_hat = vec![0.0; 2 * n * n];
        for j in 0..2 {
            for s in 0..n {
                let row = &mut t_hat[(j * n + s) * n..(j * n + s + 1) * n];
                let mut total = 0.0;
                for (s2, v) in row.iter_mut().enumerate() {
                    if s2 != s {
                        *v = 1.0 + 0.01 * rng.random_range(-1.0..1.0);
                        total += *v;
                    }
                }
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
        }
        Ok(Self {
            n_states,
            p_hat: [
                [1.0 - switch_hint, switch_hint],
                [switch_hint, 1.0 - switch_hint],
            ],
            t_hat,
            q_hat: [0.5, 0.5],
            phi: vec![0.0; 2 * 2 * n * n * 2],
            eta,
            burn_in,
            step_count: 0,
            last_step_floored: false,
            floored_steps: 0,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn q_hat(&self) -> [f64; 2] {
        self.q_hat
    }

    pub fn p_hat(&self) -> [[f64; 2]; 2] {
        self.p_hat
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    pub fn last_step_floored(&self) -> bool {
        self.last_step_floored
    }

    pub fn floored_steps(&self) -> u64 {
        self.floored_steps
    }

    pub fn transition(&self, env: usize, s: usize, s_next: usize) -> f64 {
        self.t_hat[(env * self.n_states + s) * self.n_states + s_next]
    }

    /// The estimated transition tensor of one environment as a matrix.
    pub fn transition_estimate(&self, env: usize) -> TransitionMatrixEstimate {
        let n = self.n_states;
        TransitionMatrixEstimate::from_rows(n, self.t_hat[env * n * n..(env + 1) * n * n].to_vec())
    }

    #[inline]
    fn phi_index(&self, i: usize, j: usize, s: usize, sp: usize, h: usize) -> usize {
        let n = self.n_states;
        (((i * 2 + j) * n + s) * n + sp) * 2 + h
    }

    /// One recursive E step (posterior and sufficient statistics), followed
    /// by the M step once past the burn-in. The transition `s_prev ->
    /// s_curr` is the new evidence.
    pub fn step(&mut self, s_prev: usize, s_curr: usize) -> Result<()> {
        let n = self.n_states;
        if s_prev >= n || s_curr >= n {
            return Err(SurpriseError::InvalidState {
                reason: format!("transition {s_prev} -> {s_curr} outside 0..{n}"),
            });
        }

        // one-step predictive probability of the observed transition
        let mut denom = 0.0;
        for m in 0..2 {
            for h in 0..2 {
                denom += self.q_hat[m] * self.p_hat[m][h] * self.transition(h, s_prev, s_curr);
            }
        }
        self.last_step_floored = denom < EM_DENOM_FLOOR;
        if self.last_step_floored {
            self.floored_steps += 1;
            denom = EM_DENOM_FLOOR;
        }

        // responsibilities for (previous env l, current env h)
        let mut resp = [[0.0; 2]; 2];
        for l in 0..2 {
            for h in 0..2 {
                resp[l][h] = self.p_hat[l][h] * self.transition(h, s_prev, s_curr) / denom;
            }
        }

        // environment posterior
        let q_prev = self.q_hat;
        for (h, q) in self.q_hat.iter_mut().enumerate() {
            *q = q_prev[0] * resp[0][h] + q_prev[1] * resp[1][h];
        }

        // sufficient statistics: every entry mixes across the previous
        // hidden label, and the observed transition injects fresh mass
        let keep = 1.0 - self.eta;
        let mut phi = vec![0.0; self.phi.len()];
        for i in 0..2 {
            for j in 0..2 {
                for s in 0..n {
                    let base_old = ((i * 2 + j) * n + s) * n;
                    for sp in 0..n {
                        let old0 = self.phi[(base_old + sp) * 2];
                        let old1 = self.phi[(base_old + sp) * 2 + 1];
                        for h in 0..2 {
                            phi[(base_old + sp) * 2 + h] =
                                keep * (resp[0][h] * old0 + resp[1][h] * old1);
                        }
                    }
                }
            }
        }
        for i in 0..2 {
            for h in 0..2 {
                let idx = self.phi_index(i, h, s_prev, s_curr, h);
                phi[idx] += resp[i][h] * self.eta * q_prev[i];
            }
        }
        self.phi = phi;
        self.step_count += 1;

        if self.step_count > self.burn_in {
            self.update_model_parameters();
        }
        Ok(())
    }

    /// M step: renormalizes the sufficient statistics into the switch matrix
    /// and the transition tensors. Rows with no accumulated mass keep their
    /// current estimates.
    fn update_model_parameters(&mut self) {
        let n = self.n_states;
        // switch matrix
        let mut p_num = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut sum = 0.0;
                for s in 0..n {
                    for sp in 0..n {
                        let idx = self.phi_index(i, j, s, sp, 0);
                        sum += self.phi[idx] + self.phi[idx + 1];
                    }
                }
                p_num[i][j] = sum;
            }
        }
        for i in 0..2 {
            let total = p_num[i][0] + p_num[i][1];
            if total > 0.0 {
                self.p_hat[i] = [p_num[i][0] / total, p_num[i][1] / total];
            }
        }
        // transition tensors
        for j in 0..2 {
            for s in 0..n {
                let mut row = vec![0.0; n];
                let mut total = 0.0;
                for (sp, r) in row.iter_mut().enumerate() {
                    let mut sum = 0.0;
                    for i in 0..2 {
                        let idx = self.phi_index(i, j, s, sp, 0);
                        sum += self.phi[idx] + self.phi[idx + 1];
                    }
                    *r = sum;
                    total += sum;
                }
                if total > 0.0 {
                    let dst = &mut self.t_hat[(j * n + s) * n..(j * n + s + 1) * n];
                    for (d, r) in dst.iter_mut().zip(&row) {
                        *d = r / total;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::weighted::WeightedIndex;

    #[test]
    fn fixed_gamma_examples() {
        let frozen = FixedGammaEstimator::new(1.5, 0.0).unwrap();
        assert_eq!(frozen.step(100.0).mean(), 1.5);

        let tracker = FixedGammaEstimator::new(1.5, 1.0).unwrap();
        assert_eq!(tracker.step(100.0).mean(), 100.0);

        let half = FixedGammaEstimator::new(0.0, 0.5).unwrap();
        assert_eq!(half.step(4.0).mean(), 2.0);

        assert!(FixedGammaEstimator::new(0.0, 1.5).is_err());
    }

    #[test]
    fn fixed_gamma_superposition() {
        // the recursion is linear in the inputs: response(a + b) =
        // response(a) + response(b) when started from mean 0
        let xs_a = [1.0, -2.0, 3.0, 0.5, 4.0];
        let xs_b = [0.2, 0.4, -1.0, 2.0, -3.0];
        let run = |xs: &[f64]| {
            let mut est = FixedGammaEstimator::new(0.0, 0.3).unwrap();
            for x in xs {
                est = est.step(*x);
            }
            est.mean()
        };
        let combined: Vec<f64> = xs_a.iter().zip(&xs_b).map(|(a, b)| a + b).collect();
        assert_abs_diff_eq!(run(&xs_a) + run(&xs_b), run(&combined), epsilon = 1e-12);
    }

    #[test]
    fn naive_bayes_counts_match_direct_oracle() {
        let mut nb = NaiveBayesTable::new(16).unwrap();
        let mut oracle = vec![[0u32; 16]; 16];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let s = rng.random_range(0..16);
            let mut s2 = rng.random_range(0..16);
            if s2 == s {
                s2 = (s2 + 1) % 16;
            }
            nb.observe(s, s2).unwrap();
            oracle[s][s2] += 1;
        }
        for s in 0..16 {
            let row = nb.counts().row(s).unwrap();
            for s2 in (0..16).filter(|x| *x != s) {
                let slot = TransitionBeliefTable::slot_of(s, s2);
                assert_eq!(row.alpha()[slot], 1.0 + f64::from(oracle[s][s2]));
            }
        }
    }

    #[test]
    fn naive_bayes_first_observation() {
        let mut nb = NaiveBayesTable::new(16).unwrap();
        nb.observe(2, 9).unwrap();
        let row = nb.counts().row(2).unwrap();
        let slot = TransitionBeliefTable::slot_of(2, 9);
        for (i, a) in row.alpha().iter().enumerate() {
            assert_eq!(*a, if i == slot { 2.0 } else { 1.0 });
        }
    }

    #[test]
    fn naive_bayes_row_entropy_strictly_decreases() {
        use crate::dirichlet::dirichlet_entropy;
        let mut nb = NaiveBayesTable::new(16).unwrap();
        let mut last = dirichlet_entropy(nb.counts().row(0).unwrap());
        for _ in 0..30 {
            nb.observe(0, 5).unwrap();
            let h = dirichlet_entropy(nb.counts().row(0).unwrap());
            assert!(h < last);
            last = h;
        }
    }

    #[test]
    fn em_init_matches_contract() {
        let em = OnlineEmState::init(16, 0.1, 0.05, 2000, 0).unwrap();
        assert_eq!(em.p_hat(), [[0.9, 0.1], [0.1, 0.9]]);
        assert_eq!(em.q_hat(), [0.5, 0.5]);
        assert_eq!(em.burn_in(), 2000);
        for j in 0..2 {
            for s in 0..16 {
                assert_eq!(em.transition(j, s, s), 0.0);
                let sum: f64 = (0..16).map(|sp| em.transition(j, s, sp)).sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
                for sp in (0..16).filter(|x| *x != s) {
                    let v = em.transition(j, s, sp);
                    assert!((v - 1.0 / 15.0).abs() < 0.02 / 15.0);
                }
            }
        }
    }

    #[test]
    fn em_burn_in_freezes_model_parameters() {
        let mut em = OnlineEmState::init(16, 0.1, 0.05, 50, 0).unwrap();
        let p0 = em.p_hat();
        let t0 = em.t_hat.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let topology = crate::environments::build_torus_topology();
        let mut room = 0usize;
        for k in 0..200u64 {
            let next = topology.neighbors(room)[rng.random_range(0..4)];
            em.step(room, next).unwrap();
            if k < 50 {
                assert_eq!(em.p_hat(), p0, "p_hat changed during burn-in");
                assert_eq!(em.t_hat, t0, "t_hat changed during burn-in");
            }
            room = next;
        }
        assert_ne!(em.t_hat, t0, "t_hat still frozen after burn-in");
    }

    #[test]
    fn em_invariants_preserved() {
        let mut em = OnlineEmState::init(16, 0.1, 0.05, 10, 0).unwrap();
        let topology = crate::environments::build_torus_topology();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut room = 3usize;
        for _ in 0..500 {
            let next = topology.neighbors(room)[rng.random_range(0..4)];
            em.step(room, next).unwrap();
            room = next;

            assert_abs_diff_eq!(em.q_hat()[0] + em.q_hat()[1], 1.0, epsilon = 1e-10);
            for i in 0..2 {
                assert_abs_diff_eq!(em.p_hat()[i][0] + em.p_hat()[i][1], 1.0, epsilon = 1e-10);
            }
            for j in 0..2 {
                for s in 0..16 {
                    let sum: f64 = (0..16).map(|sp| em.transition(j, s, sp)).sum();
                    assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
                }
            }
            assert!(em.phi.iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn em_symmetric_start_keeps_posterior_symmetric() {
        // with exactly equal tensors the posterior update cannot break the
        // 50/50 tie, whatever transition arrives
        let mut em = OnlineEmState::init(4, 0.1, 0.05, 1000, 0).unwrap();
        let n = em.n_states;
        for s in 0..n {
            for sp in 0..n {
                let v = em.t_hat[sp + s * n];
                em.t_hat[(n + s) * n + sp] = v;
            }
        }
        em.step(0, 1).unwrap();
        em.step(1, 3).unwrap();
        assert_abs_diff_eq!(em.q_hat()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(em.q_hat()[1], 0.5, epsilon = 1e-12);
    }

    /// Generates a two-environment switching chain with known parameters and
    /// checks that the estimated tensors approach the truth. The rate and
    /// horizon here were established against this same synthetic oracle:
    /// constant rates forget at scale 1/eta steps, so eta must be small
    /// enough for the statistics to span many sojourns.
    #[test]
    fn em_learns_synthetic_three_state_hmm() {
        let t_a = [
            [0.0, 0.8, 0.2],
            [0.3, 0.0, 0.7],
            [0.55, 0.45, 0.0],
        ];
        let t_b = [
            [0.0, 0.25, 0.75],
            [0.9, 0.0, 0.1],
            [0.2, 0.8, 0.0],
        ];
        let p_switch = 0.005;
        let mut em = OnlineEmState::init(3, 0.1, 0.002, 2000, 99).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut env = 0usize;
        let mut room = 0usize;
        for _ in 0..200_000 {
            if rng.random_range(0.0..1.0) < p_switch {
                env = 1 - env;
            }
            let row = if env == 0 { &t_a[room] } else { &t_b[room] };
            let dist = WeightedIndex::new(row.iter().copied()).unwrap();
            let next = dist.sample(&mut rng);
            em.step(room, next).unwrap();
            room = next;
        }
        // resolve the label permutation by best fit, then require every
        // entry of both tensors within 0.1 of the truth
        let err = |env_idx: usize, truth: &[[f64; 3]; 3]| -> f64 {
            let mut worst: f64 = 0.0;
            for s in 0..3 {
                for sp in 0..3 {
                    worst = worst.max((em.transition(env_idx, s, sp) - truth[s][sp]).abs());
                }
            }
            worst
        };
        let direct = err(0, &t_a).max(err(1, &t_b));
        let swapped = err(0, &t_b).max(err(1, &t_a));
        let best = direct.min(swapped);
        assert!(best < 0.1, "max entry error {best}");
        // the learned switch rate is small, like the truth
        let p = em.p_hat();
        assert!(p[0][1] < 0.05 && p[1][0] < 0.05, "p_hat {p:?}");
    }
}
