use serde::{Deserialize, Serialize};

use super::{
    build_start_area, decay_stiffness, init_layout, select_start_node, stability, LayoutParams,
    LayoutState, Phase, SpringModel, StabilityReport, Stiffness,
};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::topology::{NodeId, Topology};

/// Relative drop in `r` that counts as an improvement while growing.
const IMPROVEMENT: f64 = 1e-3;

/// Relative energy change below which a global-phase evaluation counts as
/// a stall.
const ENERGY_STALL: f64 = 1e-12;

/// Cached gradients and curvature bounds for the working set.
///
/// Gradients are updated incrementally after each step (only springs
/// touching moved nodes change) and recomputed from scratch whenever the
/// working set changes or [`StepWorkspace::refresh`] is called.
#[derive(Debug, Clone, Default)]
pub struct StepWorkspace {
    members: Vec<NodeId>,
    gradient: Vec<Point>,
    curvature: Vec<f64>,
    scores: Vec<(f64, NodeId)>,
}

impl StepWorkspace {
    pub fn new(model: &SpringModel<'_>, state: &LayoutState) -> Self {
        let mut ws = StepWorkspace::default();
        ws.rebuild(model, state);
        ws
    }

    /// Recomputes membership, curvature bounds and gradients.
    pub fn rebuild(&mut self, model: &SpringModel<'_>, state: &LayoutState) {
        let n = state.node_count();
        self.members = state.working_set();
        self.curvature = vec![0.0; n];
        for &v in &self.members {
            self.curvature[v] = model.curvature_bound(&state.in_working_set, v);
        }
        self.refresh(model, state);
    }

    /// Recomputes gradients only; clears accumulated rounding drift.
    pub fn refresh(&mut self, model: &SpringModel<'_>, state: &LayoutState) {
        self.gradient = vec![Point::ORIGIN; state.node_count()];
        for &v in &self.members {
            self.gradient[v] = model.gradient(&state.positions, &state.in_working_set, v);
        }
    }

    pub fn gradient(&self, v: NodeId) -> Point {
        self.gradient[v]
    }

    /// One multiple-node-selection step. Returns the selected nodes in
    /// ascending ID order.
    pub fn step(
        &mut self,
        model: &SpringModel<'_>,
        state: &mut LayoutState,
        params: &LayoutParams,
    ) -> Vec<NodeId> {
        state.iteration += 1;
        if self.members.is_empty() {
            return Vec::new();
        }
        let m_reset = params.reset_stiffness;

        // Rank by the length of the step each node would take.
        self.scores.clear();
        for &v in &self.members {
            let h = self.curvature[v];
            let score = if h > 0.0 {
                state.step_factor(v, m_reset) * self.gradient[v].norm() / h
            } else {
                0.0
            };
            self.scores.push((score, v));
        }
        let take = ((params.move_fraction * self.members.len() as f64).ceil() as usize)
            .clamp(1, self.members.len());
        let by_rank = |a: &(f64, NodeId), b: &(f64, NodeId)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if take < self.scores.len() {
            self.scores.select_nth_unstable_by(take - 1, by_rank);
        }
        let mut selected: Vec<NodeId> = self.scores[..take].iter().map(|&(_, v)| v).collect();
        selected.sort_unstable();

        let mut moved: Vec<(NodeId, Point)> = Vec::with_capacity(take);
        for &v in &selected {
            let eta = state.step_factor(v, m_reset);
            let h = self.curvature[v];
            if eta > 0.0 && h > 0.0 {
                let delta = self.gradient[v] * (params.step_scale * eta / h);
                if delta.norm_sq() > 0.0 {
                    moved.push((v, state.positions[v]));
                    state.positions[v] -= delta;
                }
            }
        }

        if !moved.is_empty() {
            let positions = &state.positions;
            let is_moved = |v: NodeId| moved.binary_search_by_key(&v, |m| m.0).is_ok();
            for &v in &self.members {
                if is_moved(v) {
                    continue;
                }
                let pv = positions[v];
                let mut delta = Point::ORIGIN;
                for &(s, old) in &moved {
                    delta += model.pair_gradient_at(pv, positions[s], v, s)
                        - model.pair_gradient_at(pv, old, v, s);
                }
                self.gradient[v] += delta;
            }
            for &(s, _) in &moved {
                self.gradient[s] = model.gradient(positions, &state.in_working_set, s);
            }
        }

        let z = params.remaining_energy();
        for &v in &selected {
            let t = state.select_count[v];
            if state.stiffness[v] == Stiffness::Decaying {
                state.decay_m[v] = decay_stiffness(state.decay_m[v], z, params.decay_rate, t);
            }
            state.select_count[v] = t.saturating_add(1);
        }
        selected
    }
}

/// One KK-MS step from scratch: ranks the working set by step length,
/// moves the top `⌈move_fraction·|WT|⌉` nodes along their scaled negative
/// gradients and decays their stiffness.
pub fn kk_ms_step(
    model: &SpringModel<'_>,
    state: &mut LayoutState,
    params: &LayoutParams,
) -> Vec<NodeId> {
    StepWorkspace::new(model, state).step(model, state, params)
}

/// Grows the working set by every node within two hops of it.
///
/// New nodes take the largest `decay_m` among their working-set neighbours
/// and are placed one edge length outside the neighbours they attach to.
/// Returns `false` (and switches to the global phase) when nothing could be
/// added.
pub fn expand_working_area(t: &Topology, state: &mut LayoutState, edge_length: f64) -> bool {
    let n = t.node_count();
    let members = state.working_set();
    let hops = if members.is_empty() {
        vec![None; n]
    } else {
        t.hop_distance(&members).expect("working set is valid")
    };
    let mut rings: [Vec<NodeId>; 2] = [Vec::new(), Vec::new()];
    for v in 0..n {
        match hops[v] {
            Some(1) => rings[0].push(v),
            Some(2) => rings[1].push(v),
            _ => {}
        }
    }
    if rings[0].is_empty() {
        enter_global_phase(state);
        return false;
    }

    let centroid = members
        .iter()
        .fold(Point::ORIGIN, |acc, &v| acc + state.positions[v])
        * (1.0 / members.len() as f64);
    for ring in &rings {
        // Placement and stiffness read only nodes already inside, so the
        // whole ring is computed before any of it joins.
        let placed: Vec<(NodeId, Point, f64)> = ring
            .iter()
            .map(|&v| {
                let anchors: Vec<NodeId> = t
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&u| state.in_working_set[u])
                    .collect();
                let anchor = anchors
                    .iter()
                    .fold(Point::ORIGIN, |acc, &u| acc + state.positions[u])
                    * (1.0 / anchors.len() as f64);
                let outward = unit_or(anchor - centroid, v);
                let jitter = super::coincident_direction(v, n) * (0.1 * edge_length);
                let m = anchors
                    .iter()
                    .map(|&u| state.decay_m[u])
                    .fold(0.0, f64::max);
                (v, anchor + outward * edge_length + jitter, m)
            })
            .collect();
        for (v, p, m) in placed {
            state.positions[v] = p;
            state.decay_m[v] = m;
            state.stiffness[v] = Stiffness::Decaying;
            state.in_working_set[v] = true;
        }
    }
    true
}

fn unit_or(v: Point, id: NodeId) -> Point {
    let len = v.norm();
    if len > 0.0 {
        v * (1.0 / len)
    } else {
        super::coincident_direction(id, usize::MAX)
    }
}

fn enter_global_phase(state: &mut LayoutState) {
    state.phase = Phase::Global;
    state.in_working_set.fill(true);
    state.stiffness.fill(Stiffness::Fixed);
}

/// Iterations at which snapshots are taken, besides the final state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    Iterations(Vec<u64>),
    /// 1000, 4000, 16000, … up to the iteration cap.
    Geometric,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Iterations(vec![1000, 5000, 20000])
    }
}

impl Schedule {
    pub fn iterations(&self, cap: u64) -> Vec<u64> {
        let mut its = match self {
            Schedule::Iterations(v) => v.clone(),
            Schedule::Geometric => std::iter::successors(Some(1000u64), |i| i.checked_mul(4))
                .take_while(|&i| i <= cap)
                .collect(),
        };
        its.retain(|&i| i > 0 && i <= cap);
        its.sort_unstable();
        its.dedup();
        its
    }
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Schedule::Iterations(v) => v.serialize(s),
            Schedule::Geometric => s.serialize_str("geometric"),
        }
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            List(Vec<u64>),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::List(v) => Ok(Schedule::Iterations(v)),
            Raw::Name(name) if name == "geometric" => Ok(Schedule::Geometric),
            Raw::Name(other) => Err(serde::de::Error::custom(format!(
                "unknown snapshot schedule `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// `r < ε` in the global phase.
    Threshold,
    /// `r` unchanged for `stall_window` consecutive evaluations.
    Stalled,
    /// Hit the iteration cap.
    NotConverged,
    /// Fewer than two nodes; nothing to lay out.
    Trivial,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub iteration: u64,
    pub state: LayoutState,
    /// Last evaluated stability statistic, if any.
    pub r: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LayoutRun {
    /// Parameters with every default resolved for this topology.
    pub params: LayoutParams,
    pub seed: u64,
    pub start_node: Option<NodeId>,
    /// Scheduled snapshots followed by the final state.
    pub snapshots: Vec<Snapshot>,
    pub final_report: Option<StabilityReport>,
    pub termination: Termination,
}

impl LayoutRun {
    pub fn converged(&self) -> bool {
        self.termination != Termination::NotConverged
    }

    pub fn final_state(&self) -> &LayoutState {
        &self.snapshots.last().expect("final snapshot").state
    }
}

/// Runs KK-MS-DS to termination.
pub fn run_kk_ms_ds(
    t: &Topology,
    params: &LayoutParams,
    seed: u64,
    schedule: &Schedule,
) -> Result<LayoutRun> {
    params.validate()?;
    let n = t.node_count();
    if n == 0 {
        return Err(Error::invalid("cannot lay out an empty topology"));
    }
    let params = params.resolved(n);
    let edge_length = params.edge_length_for(n);
    let max_iterations = params.max_iterations_for(n);
    let hops = t.hop_matrix();
    let model = SpringModel::new(&hops, params.spring_constant, edge_length);
    let mut state = init_layout(t, &params, seed);

    let start = select_start_node(t);
    if n < 2 {
        enter_global_phase(&mut state);
        return Ok(LayoutRun {
            params,
            seed,
            start_node: start,
            snapshots: vec![Snapshot {
                iteration: 0,
                state,
                r: None,
            }],
            final_report: None,
            termination: Termination::Trivial,
        });
    }

    build_start_area(t, &mut state, start.expect("n >= 2"));
    let mut ws = StepWorkspace::new(&model, &state);
    let scheduled = schedule.iterations(max_iterations);
    let mut next_snapshot = scheduled.iter().copied().peekable();
    let mut snapshots = Vec::with_capacity(scheduled.len() + 1);

    let mut last_r: Option<f64> = None;
    let mut best_r = f64::INFINITY;
    let mut stale = 0u32;
    let mut stalls = 0u32;
    let mut last_energy: Option<f64> = None;
    let period = params.stability_period;

    let termination = loop {
        if state.iteration >= max_iterations {
            break Termination::NotConverged;
        }
        ws.step(&model, &mut state, &params);
        if next_snapshot.peek() == Some(&state.iteration) {
            next_snapshot.next();
            snapshots.push(Snapshot {
                iteration: state.iteration,
                state: state.clone(),
                r: last_r,
            });
        }
        if state.iteration % period != 0 {
            continue;
        }

        ws.refresh(&model, &state);
        let report = stability(t, &state, edge_length);
        let r = report.r;
        match state.phase {
            Phase::Growing => {
                last_r = Some(r);
                if r < best_r * (1.0 - IMPROVEMENT) {
                    best_r = r;
                    stale = 0;
                } else {
                    stale += 1;
                }
                if r < params.epsilon || stale >= params.grow_patience {
                    expand_working_area(t, &mut state, edge_length);
                    ws.rebuild(&model, &state);
                    best_r = f64::INFINITY;
                    stale = 0;
                    if state.phase == Phase::Global {
                        let entry = stability(t, &state, edge_length);
                        last_r = Some(entry.r);
                        if entry.r < params.epsilon {
                            break Termination::Threshold;
                        }
                    }
                } else {
                    for v in 0..n {
                        if state.in_working_set[v] {
                            state.decay_m[v] = params.reset_stiffness;
                        }
                    }
                }
            }
            Phase::Global => {
                if r < params.epsilon {
                    break Termination::Threshold;
                }
                // A near-uniform layout drives σ towards zero, so r itself
                // can swing wildly while nothing moves; a flat energy counts
                // as a stall too.
                let energy = model.energy(&state.positions, &state.in_working_set);
                let r_flat = last_r.is_some_and(|prev| (r - prev).abs() < params.stall_tolerance);
                let e_flat = last_energy
                    .is_some_and(|prev| (energy - prev).abs() <= ENERGY_STALL * prev);
                if r_flat || e_flat {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                last_r = Some(r);
                last_energy = Some(energy);
                if stalls >= params.stall_window {
                    break Termination::Stalled;
                }
            }
        }
    };

    let final_report = stability(t, &state, edge_length);
    if snapshots.last().map(|s| s.iteration) != Some(state.iteration) {
        snapshots.push(Snapshot {
            iteration: state.iteration,
            state,
            r: Some(final_report.r),
        });
    } else if let Some(last) = snapshots.last_mut() {
        last.r = Some(final_report.r);
    }
    Ok(LayoutRun {
        params,
        seed,
        start_node: start,
        snapshots,
        final_report: Some(final_report),
        termination,
    })
}
