//! Data-generating processes for the two benchmark tasks.
//!
//! Both environments own a seeded RNG and are fully deterministic: identical
//! seeds give bit-identical streams. The learner never shares this RNG.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::dirichlet::TransitionMatrixEstimate;
use crate::error::{Result, SurpriseError};

/// Number of rooms in the maze tasks.
pub const MAZE_ROOMS: usize = 16;

/// A stream of Gaussian samples whose mean is redrawn uniformly from
/// `mean_range` with probability `hazard` at every step, before sampling.
#[derive(Debug, Clone)]
pub struct GaussianChangePointEnv {
    true_mean: f64,
    obs_sigma: f64,
    hazard: f64,
    mean_range: (f64, f64),
    rng: ChaCha8Rng,
}

/// One emitted sample with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStep {
    pub sample: f64,
    pub changed: bool,
    pub true_mean: f64,
}

impl GaussianChangePointEnv {
    /// Default observation noise of the estimation task.
    pub const DEFAULT_SIGMA: f64 = 4.0;
    /// Default hazard rate (one change every ~15 steps).
    pub const DEFAULT_HAZARD: f64 = 0.066;
    /// Default interval the mean is drawn from.
    pub const DEFAULT_MEAN_RANGE: (f64, f64) = (-20.0, 20.0);

    pub fn new(hazard: f64, obs_sigma: f64, seed: u64) -> Result<Self> {
        Self::with_range(hazard, obs_sigma, Self::DEFAULT_MEAN_RANGE, seed)
    }

    pub fn with_range(
        hazard: f64,
        obs_sigma: f64,
        mean_range: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&hazard) {
            return Err(SurpriseError::InvalidParameter {
                name: "hazard",
                value: hazard,
            });
        }
        if !obs_sigma.is_finite() || obs_sigma <= 0.0 {
            return Err(SurpriseError::InvalidParameter {
                name: "obs_sigma",
                value: obs_sigma,
            });
        }
        if !(mean_range.0 < mean_range.1) {
            return Err(SurpriseError::InvalidParameter {
                name: "mean_range",
                value: mean_range.1 - mean_range.0,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let true_mean = rng.random_range(mean_range.0..mean_range.1);
        Ok(Self {
            true_mean,
            obs_sigma,
            hazard,
            mean_range,
            rng,
        })
    }

    pub fn true_mean(&self) -> f64 {
        self.true_mean
    }

    pub fn obs_sigma(&self) -> f64 {
        self.obs_sigma
    }

    /// Possibly redraws the mean, then emits one sample from it. A change at
    /// this step is already reflected in the emitted sample.
    pub fn step(&mut self) -> GaussianStep {
        let changed = self.rng.random_range(0.0..1.0) < self.hazard;
        if changed {
            self.true_mean = self
                .rng
                .random_range(self.mean_range.0..self.mean_range.1);
        }
        let normal = Normal::new(self.true_mean, self.obs_sigma)
            .expect("obs_sigma validated at construction");
        GaussianStep {
            sample: normal.sample(&mut self.rng),
            changed,
            true_mean: self.true_mean,
        }
    }
}

/// Room adjacency of one maze: every room has exactly four neighbors, the
/// relation is symmetric and the graph is connected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MazeTopology {
    neighbors: Vec<[usize; 4]>,
}

impl MazeTopology {
    fn validate(neighbors: Vec<[usize; 4]>) -> Result<Self> {
        let n = neighbors.len();
        if n != MAZE_ROOMS {
            return Err(SurpriseError::InvalidState {
                reason: format!("expected {MAZE_ROOMS} rooms, got {n}"),
            });
        }
        for (room, nb) in neighbors.iter().enumerate() {
            for other in nb {
                if *other >= n || *other == room {
                    return Err(SurpriseError::InvalidState {
                        reason: format!("room {room} has invalid neighbor {other}"),
                    });
                }
                if !neighbors[*other].contains(&room) {
                    return Err(SurpriseError::InvalidState {
                        reason: format!("adjacency not symmetric between {room} and {other}"),
                    });
                }
            }
            let mut sorted = *nb;
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(SurpriseError::InvalidState {
                    reason: format!("room {room} repeats a neighbor"),
                });
            }
        }
        // connectivity by breadth-first search from room 0
        let mut seen = vec![false; n];
        let mut queue = vec![0usize];
        seen[0] = true;
        while let Some(room) = queue.pop() {
            for other in neighbors[room] {
                if !seen[other] {
                    seen[other] = true;
                    queue.push(other);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(SurpriseError::InvalidState {
                reason: "maze is not connected".into(),
            });
        }
        Ok(Self { neighbors })
    }

    pub fn neighbors(&self, room: usize) -> &[usize; 4] {
        &self.neighbors[room]
    }

    pub fn n_rooms(&self) -> usize {
        self.neighbors.len()
    }
}

/// The 4x4 wrap-around grid: room `4r + c` connects to its horizontal and
/// vertical neighbors modulo 4, so every room has exactly four doors.
pub fn build_torus_topology() -> MazeTopology {
    let mut neighbors = Vec::with_capacity(MAZE_ROOMS);
    for r in 0..4 {
        for c in 0..4 {
            neighbors.push([
                4 * r + (c + 1) % 4,
                4 * r + (c + 3) % 4,
                4 * ((r + 1) % 4) + c,
                4 * ((r + 3) % 4) + c,
            ]);
        }
    }
    MazeTopology::validate(neighbors).expect("torus adjacency is valid")
}

/// Relabels rooms through a bijection: `perm[s]` is the new id of room `s`.
/// Degree, symmetry and connectivity are invariant under relabeling.
pub fn permute_topology(topology: &MazeTopology, perm: &[usize]) -> Result<MazeTopology> {
    let n = topology.n_rooms();
    if perm.len() != n {
        return Err(SurpriseError::DimensionMismatch {
            left: perm.len(),
            right: n,
        });
    }
    let mut seen = vec![false; n];
    for p in perm {
        if *p >= n || seen[*p] {
            return Err(SurpriseError::InvalidState {
                reason: format!("permutation is not a bijection on 0..{n}"),
            });
        }
        seen[*p] = true;
    }
    let mut neighbors = vec![[0usize; 4]; n];
    for (room, nb) in topology.neighbors.iter().enumerate() {
        let mut mapped = [0usize; 4];
        for (slot, other) in nb.iter().enumerate() {
            mapped[slot] = perm[*other];
        }
        mapped.sort_unstable();
        neighbors[perm[room]] = mapped;
    }
    MazeTopology::validate(neighbors)
}

/// Doorless view of a topology as transition probabilities: 1/4 on each
/// neighbor, zero elsewhere.
pub fn true_transition_matrix(topology: &MazeTopology) -> TransitionMatrixEstimate {
    let n = topology.n_rooms();
    let mut values = vec![0.0; n * n];
    for (room, nb) in topology.neighbors.iter().enumerate() {
        for other in nb {
            values[room * n + other] = 0.25;
        }
    }
    TransitionMatrixEstimate::from_rows(n, values)
}

/// Which of the two mazes is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvLabel {
    A,
    B,
}

impl std::fmt::Display for EnvLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnvLabel::A => write!(f, "A"),
            EnvLabel::B => write!(f, "B"),
        }
    }
}

/// A random walk over two mazes that share room labels but differ in
/// topology. Each step first decides whether the environment switches, then
/// moves through a uniformly chosen door of the current room under the
/// (possibly new) topology.
#[derive(Debug, Clone)]
pub struct MazeEnv {
    topology_a: MazeTopology,
    topology_b: MazeTopology,
    current_env: EnvLabel,
    current_room: usize,
    p_ab: f64,
    p_ba: f64,
    rng: ChaCha8Rng,
}

/// One movement with its bookkeeping. `env` is the environment the move was
/// made in, i.e. after any switch at this step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MazeStep {
    pub room: usize,
    pub next_room: usize,
    pub env: EnvLabel,
    pub switched: bool,
}

impl MazeEnv {
    /// Largest admissible switch probability.
    pub const MAX_SWITCH_PROB: f64 = 0.1;

    pub fn new(
        topology_a: MazeTopology,
        topology_b: MazeTopology,
        p_ab: f64,
        p_ba: f64,
        seed: u64,
    ) -> Result<Self> {
        for (name, p) in [("p_ab", p_ab), ("p_ba", p_ba)] {
            if !(0.0..=Self::MAX_SWITCH_PROB).contains(&p) {
                return Err(SurpriseError::InvalidParameter { name, value: p });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let current_room = rng.random_range(0..topology_a.n_rooms());
        Ok(Self {
            topology_a,
            topology_b,
            current_env: EnvLabel::A,
            current_room,
            p_ab,
            p_ba,
            rng,
        })
    }

    pub fn current_env(&self) -> EnvLabel {
        self.current_env
    }

    pub fn current_room(&self) -> usize {
        self.current_room
    }

    pub fn topology(&self, env: EnvLabel) -> &MazeTopology {
        match env {
            EnvLabel::A => &self.topology_a,
            EnvLabel::B => &self.topology_b,
        }
    }

    pub fn step(&mut self) -> MazeStep {
        let switch_prob = match self.current_env {
            EnvLabel::A => self.p_ab,
            EnvLabel::B => self.p_ba,
        };
        let switched = self.rng.random_range(0.0..1.0) < switch_prob;
        if switched {
            self.current_env = match self.current_env {
                EnvLabel::A => EnvLabel::B,
                EnvLabel::B => EnvLabel::A,
            };
        }
        let topology = match self.current_env {
            EnvLabel::A => &self.topology_a,
            EnvLabel::B => &self.topology_b,
        };
        let door = self.rng.random_range(0..4);
        let room = self.current_room;
        let next_room = topology.neighbors[room][door];
        self.current_room = next_room;
        MazeStep {
            room,
            next_room,
            env: self.current_env,
            switched,
        }
    }
}

/// Draws a uniformly random permutation of `0..n` from a seeded stream;
/// used to build environment B topologies per episode.
pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    ids
}
