//! Dirichlet beliefs over per-state transition probabilities.
//!
//! Each state s carries a Dirichlet belief over its D-1 possible successor
//! states. Observing a transition s -> s' turns into the scaled likelihood
//! `Dir(b)` with `b = 1 + [slot = s']`, and the surprise-minimizing update is
//! a convex mix of parameter vectors: `beta = (1-gamma) alpha + gamma b`.

use serde::{Deserialize, Serialize};

use crate::categorical::SurpriseValue;
use crate::engine::{smile_step, solve_gamma, BeliefFamily, SmileConfig, SmileStepDiagnostics};
use crate::error::{Result, SurpriseError};
use crate::special::{digamma_unchecked, log_gamma_unchecked};

/// Default epsilon of the transition-matrix point estimator; small enough to
/// be negligible against a single observation yet avoiding 0/0 at a fresh
/// table.
pub const DEFAULT_ESTIMATOR_EPS: f64 = 1e-6;

/// Concentration parameters of a Dirichlet belief, every component >= 1.
///
/// Initialization sets all components to 1 and updates are convex mixes of
/// vectors with components >= 1, so the invariant is preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(SurpriseError::TooFewComponents(alpha.len()));
        }
        if let Some(a) = alpha.iter().find(|a| !a.is_finite() || **a < 1.0) {
            return Err(SurpriseError::InvalidParameter {
                name: "alpha",
                value: *a,
            });
        }
        Ok(Self { alpha })
    }

    /// The flat prior `Dir(1, ..., 1)` over `dim` outcomes.
    pub fn flat(dim: usize) -> Result<Self> {
        Self::new(vec![1.0; dim])
    }

    /// Parameters of the scaled likelihood of observing `slot`:
    /// all ones plus a unit bump at `slot`.
    pub fn observation_bump(dim: usize, slot: usize) -> Result<Self> {
        if slot >= dim {
            return Err(SurpriseError::InvalidState {
                reason: format!("slot {slot} out of range for dimension {dim}"),
            });
        }
        let mut alpha = vec![1.0; dim];
        alpha[slot] = 2.0;
        Self::new(alpha)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

impl TryFrom<Vec<f64>> for DirichletParams {
    type Error = SurpriseError;

    fn try_from(alpha: Vec<f64>) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<DirichletParams> for Vec<f64> {
    fn from(p: DirichletParams) -> Self {
        p.alpha
    }
}

/// `KL(Dir(m) || Dir(n))` via log-gamma and digamma:
///
/// ```text
/// ln G(sum m) - ln G(sum n) - sum ln G(m_i) + sum ln G(n_i)
///   + sum (m_i - n_i)(psi(m_i) - psi(sum m))
/// ```
pub fn kl_dirichlet(m: &DirichletParams, n: &DirichletParams) -> Result<SurpriseValue> {
    if m.len() != n.len() {
        return Err(SurpriseError::DimensionMismatch {
            left: m.len(),
            right: n.len(),
        });
    }
    let m0 = m.sum();
    let n0 = n.sum();
    let psi_m0 = digamma_unchecked(m0);
    let mut nats = log_gamma_unchecked(m0) - log_gamma_unchecked(n0);
    for (mi, ni) in m.alpha.iter().zip(&n.alpha) {
        nats += log_gamma_unchecked(*ni) - log_gamma_unchecked(*mi);
        nats += (mi - ni) * (digamma_unchecked(*mi) - psi_m0);
    }
    SurpriseValue::new(nats)
}

/// Confidence-corrected surprise of observing the successor in `slot`:
/// `KL(Dir(alpha) || Dir(1 + e_slot))`.
pub fn dirichlet_surprise(current: &DirichletParams, slot: usize) -> Result<SurpriseValue> {
    let bump = DirichletParams::observation_bump(current.len(), slot)?;
    kl_dirichlet(current, &bump)
}

/// The surprise-minimizing update: `beta = (1-gamma) alpha + gamma b` with
/// `b = 1 + e_slot`. Components stay >= 1.
pub fn dirichlet_smile_update(
    a: &DirichletParams,
    slot: usize,
    gamma: f64,
) -> Result<DirichletParams> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(SurpriseError::InvalidParameter {
            name: "gamma",
            value: gamma,
        });
    }
    if slot >= a.len() {
        return Err(SurpriseError::InvalidState {
            reason: format!("slot {slot} out of range for dimension {}", a.len()),
        });
    }
    let alpha = a
        .alpha
        .iter()
        .enumerate()
        .map(|(i, ai)| {
            let b = if i == slot { 2.0 } else { 1.0 };
            (1.0 - gamma) * ai + gamma * b
        })
        .collect();
    DirichletParams::new(alpha)
}

/// Solves `KL(Dir((1-gamma) a + gamma b) || Dir(a)) = bound` for gamma by the
/// same bisection as the generic engine.
pub fn solve_gamma_dirichlet(
    a: &DirichletParams,
    slot: usize,
    bound: f64,
    config: &SmileConfig,
) -> Result<f64> {
    solve_gamma(a, &slot, bound, config)
}

/// Differential entropy of `Dir(alpha)` in nats.
pub fn dirichlet_entropy(params: &DirichletParams) -> f64 {
    let a0 = params.sum();
    let d = params.len() as f64;
    let mut h = -log_gamma_unchecked(a0) + (a0 - d) * digamma_unchecked(a0);
    for a in &params.alpha {
        h += log_gamma_unchecked(*a) - (a - 1.0) * digamma_unchecked(*a);
    }
    h
}

impl BeliefFamily for DirichletParams {
    /// The observed successor, as a slot index into the parameter vector.
    type Observation = usize;

    fn kl(&self, other: &Self) -> Result<f64> {
        Ok(kl_dirichlet(self, other)?.nats())
    }

    fn scaled_likelihood(&self, slot: &usize) -> Result<Self> {
        DirichletParams::observation_bump(self.len(), *slot)
    }

    fn geometric_mix(&self, slot: &usize, gamma: f64) -> Result<Self> {
        dirichlet_smile_update(self, *slot, gamma)
    }
}

/// Per-state Dirichlet beliefs over successor states: one row of D-1
/// parameters for each of the D states, successor slots skipping the state
/// itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionBeliefTable {
    rows: Vec<DirichletParams>,
}

impl TransitionBeliefTable {
    /// A fresh table with every parameter at 1 (uniform prior belief).
    pub fn flat(n_states: usize) -> Result<Self> {
        if n_states < 2 {
            return Err(SurpriseError::TooFewComponents(n_states));
        }
        Ok(Self {
            rows: (0..n_states)
                .map(|_| DirichletParams::flat(n_states - 1))
                .collect::<Result<_>>()?,
        })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, state: usize) -> Result<&DirichletParams> {
        self.rows.get(state).ok_or_else(|| SurpriseError::InvalidState {
            reason: format!("state {state} out of range for {} states", self.rows.len()),
        })
    }

    pub fn rows(&self) -> &[DirichletParams] {
        &self.rows
    }

    /// Rebuilds a table from rows of equal dimension `n_states - 1`.
    pub fn try_from_rows(rows: Vec<DirichletParams>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(SurpriseError::TooFewComponents(n));
        }
        if rows.iter().any(|r| r.len() != n - 1) {
            return Err(SurpriseError::InvalidState {
                reason: "row dimension must be n_states - 1".into(),
            });
        }
        Ok(Self { rows })
    }

    pub(crate) fn set_row(&mut self, state: usize, row: DirichletParams) {
        debug_assert_eq!(row.len() + 1, self.rows.len());
        self.rows[state] = row;
    }

    /// Index of successor `next` within row `state` (the row skips `state`).
    pub fn slot_of(state: usize, next: usize) -> usize {
        if next < state {
            next
        } else {
            next - 1
        }
    }

    /// Successor state stored at `slot` of row `state`.
    pub fn state_of(state: usize, slot: usize) -> usize {
        if slot < state {
            slot
        } else {
            slot + 1
        }
    }

    fn check_transition(&self, s: usize, s_next: usize) -> Result<()> {
        let n = self.rows.len();
        if s >= n || s_next >= n {
            return Err(SurpriseError::InvalidState {
                reason: format!("transition {s} -> {s_next} outside 0..{n}"),
            });
        }
        if s == s_next {
            return Err(SurpriseError::InvalidState {
                reason: format!("self-transition {s} -> {s} is not representable"),
            });
        }
        Ok(())
    }
}

impl Serialize for TransitionBeliefTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.rows.len()))?;
        for (state, row) in self.rows.iter().enumerate() {
            map.serialize_entry(&state.to_string(), row)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for TransitionBeliefTable {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let map: std::collections::BTreeMap<String, DirichletParams> =
            Deserialize::deserialize(deserializer)?;
        let n = map.len();
        let mut rows = vec![None; n];
        for (key, row) in map {
            let state: usize = key
                .parse()
                .map_err(|_| D::Error::custom(format!("bad state id {key:?}")))?;
            if state >= n {
                return Err(D::Error::custom(format!(
                    "state id {state} out of range for {n} rows"
                )));
            }
            if row.len() != n - 1 {
                return Err(D::Error::custom(format!(
                    "row {state} has {} slots, expected {}",
                    row.len(),
                    n - 1
                )));
            }
            rows[state] = Some(row);
        }
        let rows: Vec<DirichletParams> = rows.into_iter().map(|r| r.unwrap()).collect();
        if rows.len() < 2 {
            return Err(D::Error::custom("table needs at least 2 states"));
        }
        Ok(Self { rows })
    }
}

/// A row-stochastic point estimate of the transition structure, zero on the
/// diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrixEstimate {
    n: usize,
    values: Vec<f64>,
}

impl TransitionMatrixEstimate {
    pub(crate) fn from_rows(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, s_next: usize) -> f64 {
        self.values[s * self.n + s_next]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean squared entry difference over all n*n entries, diagonal
    /// included: `n^-2 sum (self - other)^2`.
    pub fn mean_squared_error(&self, other: &TransitionMatrixEstimate) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sum / (self.n * self.n) as f64
    }

    /// Largest absolute entry difference.
    pub fn max_abs_error(&self, other: &TransitionMatrixEstimate) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Entry-wise average of two estimates.
    pub fn average(&self, other: &TransitionMatrixEstimate) -> TransitionMatrixEstimate {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        }
    }
}

/// Point estimate `T(s, s') = (alpha(s,s') - 1 + eps) / sum(alpha(s,.) - 1 + eps)`.
///
/// With a fresh table every off-diagonal entry is `1/(D-1)`.
pub fn estimate_transition_matrix(
    table: &TransitionBeliefTable,
    eps: f64,
) -> TransitionMatrixEstimate {
    debug_assert!(eps > 0.0);
    let n = table.n_states();
    let mut values = vec![0.0; n * n];
    for (s, row) in table.rows.iter().enumerate() {
        let total: f64 = row.alpha.iter().map(|a| a - 1.0 + eps).sum();
        for (slot, a) in row.alpha.iter().enumerate() {
            let s_next = TransitionBeliefTable::state_of(s, slot);
            values[s * n + s_next] = (a - 1.0 + eps) / total;
        }
    }
    TransitionMatrixEstimate::from_rows(n, values)
}

/// Total model uncertainty: the sum of the rows' Dirichlet differential
/// entropies.
pub fn belief_entropy_total(table: &TransitionBeliefTable) -> f64 {
    table.rows.iter().map(dirichlet_entropy).sum()
}

/// One surprise-modulated update of the row for state `s` after observing the
/// transition `s -> s_next`. Only that row changes.
pub fn maze_smile_step(
    table: &TransitionBeliefTable,
    s: usize,
    s_next: usize,
    config: &SmileConfig,
) -> Result<(TransitionBeliefTable, SmileStepDiagnostics)> {
    table.check_transition(s, s_next)?;
    let slot = TransitionBeliefTable::slot_of(s, s_next);
    let (new_row, diagnostics) = smile_step(&table.rows[s], &slot, config)?;
    let mut updated = table.clone();
    updated.rows[s] = new_row;
    Ok((updated, diagnostics))
}
