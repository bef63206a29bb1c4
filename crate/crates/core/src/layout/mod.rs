//! KK-MS-DS force-directed layout estimation.
//!
//! The engine grows a working area outwards from the best-connected node,
//! relaxing a Kamada-Kawai spring system over hop distances with multiple
//! node selection (a fraction of the most displaced nodes moves per step)
//! and decaying per-node stiffness. Once the area covers everything
//! reachable, a global phase relaxes the whole graph with fixed stiffness.

mod energy;
mod engine;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use energy::{coincident_direction, SpringModel};
pub use engine::{
    expand_working_area, kk_ms_step, run_kk_ms_ds, LayoutRun, Schedule, Snapshot, StepWorkspace,
    Termination,
};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::topology::{NodeId, Topology};

/// Exclusive upper limit on `step_scale`; at 2 even a single mover
/// overshoots its spring minimum.
pub const MAX_STEP_SCALE: f64 = 2.0;

/// Floor on the default iteration cap so small graphs can settle.
pub const MIN_ITERATION_CAP: u64 = 20_000;

/// Tuning knobs of the engine. Fields left as `None` are derived from the
/// node count when a run starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    /// Spring-constant scale `K`; the spring between nodes `d` hops apart
    /// has stiffness `K / d²`.
    pub spring_constant: f64,
    /// Desired length of a one-hop edge (`L0`). Default `1/√n`.
    pub edge_length: Option<f64>,
    /// Value the decaying stiffness is reset to (`M`).
    pub reset_stiffness: f64,
    /// Decay rate `p` in `(0, 1)`.
    pub decay_rate: f64,
    /// Remaining-energy coefficient `z`. Default `M·(1 − p)`.
    pub remaining_energy: Option<f64>,
    /// Stability threshold `ε` on the statistic `r`.
    pub epsilon: f64,
    /// Iterations between evaluations of `r`.
    pub stability_period: u64,
    /// Consecutive unchanged evaluations of `r` that end the global phase.
    pub stall_window: u32,
    /// `|Δr|` below which `r` counts as unchanged.
    pub stall_tolerance: f64,
    /// Evaluations without improvement of `r` after which the working area
    /// grows even though `r ≥ ε`.
    pub grow_patience: u32,
    /// Fraction of the working area moved per step.
    pub move_fraction: f64,
    /// Hard iteration cap. Default `max(200·n, 20000)`.
    pub max_iterations: Option<u64>,
    /// Step length relative to the curvature bound of each node. Energy is
    /// nonincreasing per step for any value in `(0, 1]`, however many nodes
    /// move at once; values up to 2 are accepted but only a lone mover is
    /// then guaranteed to descend.
    pub step_scale: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            spring_constant: 1.0,
            edge_length: None,
            reset_stiffness: 1.0,
            decay_rate: 0.9,
            remaining_energy: None,
            epsilon: 0.05,
            stability_period: 100,
            stall_window: 10,
            stall_tolerance: 1e-6,
            grow_patience: 3,
            move_fraction: 0.05,
            max_iterations: None,
            step_scale: 0.9,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.spring_constant > 0.0, "spring_constant must be positive"),
            (
                self.edge_length.is_none_or(|l| l > 0.0 && l.is_finite()),
                "edge_length must be positive",
            ),
            (self.reset_stiffness > 0.0, "reset_stiffness must be positive"),
            (
                self.decay_rate > 0.0 && self.decay_rate < 1.0,
                "decay_rate must lie in (0, 1)",
            ),
            (
                self.remaining_energy.is_none_or(|z| z >= 0.0),
                "remaining_energy must be nonnegative",
            ),
            (self.epsilon > 0.0, "epsilon must be positive"),
            (self.stability_period >= 1, "stability_period must be at least 1"),
            (self.stall_window >= 1, "stall_window must be at least 1"),
            (
                self.move_fraction > 0.0 && self.move_fraction <= 1.0,
                "move_fraction must lie in (0, 1]",
            ),
            (
                self.step_scale > 0.0 && self.step_scale < MAX_STEP_SCALE,
                "step_scale must lie in (0, 2)",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::invalid(*msg)),
            None => Ok(()),
        }
    }

    pub fn edge_length_for(&self, n: usize) -> f64 {
        self.edge_length
            .unwrap_or_else(|| 1.0 / (n.max(1) as f64).sqrt())
    }

    pub fn remaining_energy(&self) -> f64 {
        self.remaining_energy
            .unwrap_or(self.reset_stiffness * (1.0 - self.decay_rate))
    }

    pub fn max_iterations_for(&self, n: usize) -> u64 {
        self.max_iterations.unwrap_or((200 * n as u64).max(MIN_ITERATION_CAP))
    }

    /// Copy with every `None` replaced by its value for `n` nodes.
    pub fn resolved(&self, n: usize) -> LayoutParams {
        LayoutParams {
            edge_length: Some(self.edge_length_for(n)),
            remaining_energy: Some(self.remaining_energy()),
            max_iterations: Some(self.max_iterations_for(n)),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Growing,
    Global,
}

/// How a node's movement is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stiffness {
    /// Step scaled by `decay_m / M`.
    Decaying,
    /// Full step, springs `−K/d²`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutState {
    pub positions: Vec<Point>,
    pub in_working_set: Vec<bool>,
    pub stiffness: Vec<Stiffness>,
    pub decay_m: Vec<f64>,
    pub select_count: Vec<u32>,
    pub iteration: u64,
    pub phase: Phase,
}

impl LayoutState {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn working_set(&self) -> Vec<NodeId> {
        (0..self.node_count())
            .filter(|&v| self.in_working_set[v])
            .collect()
    }

    pub fn working_set_len(&self) -> usize {
        self.in_working_set.iter().filter(|&&w| w).count()
    }

    /// Step multiplier `η`: `decay_m / M` for decaying nodes, 1 otherwise.
    pub fn step_factor(&self, v: NodeId, reset_stiffness: f64) -> f64 {
        match self.stiffness[v] {
            Stiffness::Decaying => self.decay_m[v] / reset_stiffness,
            Stiffness::Fixed => 1.0,
        }
    }
}

/// Uniform random positions in the unit square, empty working set.
pub fn init_layout(t: &Topology, params: &LayoutParams, seed: u64) -> LayoutState {
    let n = t.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n)
        .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    LayoutState {
        positions,
        in_working_set: vec![false; n],
        stiffness: vec![Stiffness::Fixed; n],
        decay_m: vec![params.reset_stiffness; n],
        select_count: vec![0; n],
        iteration: 0,
        phase: Phase::Growing,
    }
}

/// Node of maximum degree, smallest ID on ties. `None` for an empty graph.
pub fn select_start_node(t: &Topology) -> Option<NodeId> {
    (0..t.node_count()).max_by(|&a, &b| t.degree(a).cmp(&t.degree(b)).then(b.cmp(&a)))
}

/// Seeds the working area with `s` and everything within two hops of it.
pub fn build_start_area(t: &Topology, state: &mut LayoutState, s: NodeId) {
    let hops = t.hop_distance(&[s]).expect("start node is valid");
    for v in 0..t.node_count() {
        let member = hops[v].is_some_and(|h| h <= 2);
        state.in_working_set[v] = member;
        if member {
            state.stiffness[v] = Stiffness::Decaying;
        }
    }
    state.phase = Phase::Growing;
}

/// `m' = m − z·pᵗ`, floored at zero.
pub fn decay_stiffness(m: f64, z: f64, p: f64, t: u32) -> f64 {
    (m - z * p.powi(t as i32)).max(0.0)
}

/// Edge-length residual statistic of the working area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `|mean residual| / σ`, or 0 when σ is degenerate.
    pub r: f64,
    pub mean_residual: f64,
    /// Sample standard deviation of the residuals.
    pub sigma: f64,
    pub edge_count: usize,
    /// Fewer than two measured edges, or all residuals equal: every edge is
    /// stretched alike, which is a stable configuration.
    pub degenerate_uniform: bool,
}

/// σ below this is treated as zero.
pub const SIGMA_FLOOR: f64 = 1e-10;

/// Residual statistic over the edges inside the working set, each compared
/// with the one-hop length `edge_length`.
pub fn stability(t: &Topology, state: &LayoutState, edge_length: f64) -> StabilityReport {
    let residuals: Vec<f64> = t
        .edges()
        .iter()
        .filter(|&&(u, v)| state.in_working_set[u] && state.in_working_set[v])
        .map(|&(u, v)| state.positions[u].distance(state.positions[v]) - edge_length)
        .collect();
    residual_statistic(&residuals)
}

/// `r = |mean| / s` with `s` the sample standard deviation.
pub fn residual_statistic(residuals: &[f64]) -> StabilityReport {
    let l = residuals.len();
    let mean = if l == 0 {
        0.0
    } else {
        residuals.iter().sum::<f64>() / l as f64
    };
    let sigma = if l < 2 {
        0.0
    } else {
        (residuals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (l - 1) as f64).sqrt()
    };
    let degenerate = sigma < SIGMA_FLOOR;
    StabilityReport {
        r: if degenerate { 0.0 } else { mean.abs() / sigma },
        mean_residual: mean,
        sigma,
        edge_count: l,
        degenerate_uniform: degenerate,
    }
}
