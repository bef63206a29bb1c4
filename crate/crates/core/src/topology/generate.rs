//! Synthetic sensor fields with planted coverage voids.
//!
//! Nodes are thrown into the unit square, circular voids are kept empty,
//! and the communication range is picked so the unit-disk graph hits the
//! requested average degree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NodeId, Topology};
use crate::error::{Error, Result};
use crate::geom::Point;

/// Accepted gap between the achieved and requested average degree.
pub const DEGREE_TOLERANCE: f64 = 0.25;
/// Minimum share of nodes in the largest connected component.
pub const GIANT_COMPONENT_FRACTION: f64 = 0.95;
/// Re-sampling budget when the giant-component floor is missed.
pub const MAX_ATTEMPTS: u32 = 16;

/// Clearance between a void and the edge of the unit square.
const VOID_BORDER: f64 = 0.06;
/// Clearance between two voids.
const VOID_GAP: f64 = 0.06;
const VOID_SAMPLING_BUDGET: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleSpec {
    pub count: usize,
    pub radius_min: f64,
    pub radius_max: f64,
}

impl Default for HoleSpec {
    fn default() -> Self {
        HoleSpec {
            count: 3,
            radius_min: 0.08,
            radius_max: 0.15,
        }
    }
}

/// How the sensing radius is derived once the communication range is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingRule {
    /// `R_S = ratio · R_C`.
    CommRatio(f64),
    /// Fixed radius in world units.
    Absolute(f64),
}

impl Default for SensingRule {
    fn default() -> Self {
        SensingRule::CommRatio(0.8)
    }
}

impl SensingRule {
    pub fn resolve(self, communication_range: f64) -> f64 {
        match self {
            SensingRule::CommRatio(ratio) => ratio * communication_range,
            SensingRule::Absolute(r) => r,
        }
    }

    /// Ratio of sensing to communication range, when the rule defines one.
    pub fn comm_ratio(self) -> Option<f64> {
        match self {
            SensingRule::CommRatio(ratio) => Some(ratio),
            SensingRule::Absolute(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementModel {
    /// Independent uniform samples.
    Uniform,
    /// Uniform dart throwing with a minimum spacing that relaxes whenever
    /// the square gets too full to accept new darts.
    #[default]
    BlueNoise,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub nodes: usize,
    pub degree: f64,
    #[serde(default)]
    pub holes: HoleSpec,
    #[serde(default)]
    pub sensing: SensingRule,
    #[serde(default)]
    pub placement: PlacementModel,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(nodes: usize, degree: f64, seed: u64) -> Self {
        GeneratorConfig {
            nodes,
            degree,
            holes: HoleSpec::default(),
            sensing: SensingRule::default(),
            placement: PlacementModel::default(),
            seed,
        }
    }

    pub fn with_holes(mut self, holes: HoleSpec) -> Self {
        self.holes = holes;
        self
    }
}

/// A circular region kept free of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Void {
    pub center: Point,
    pub radius: f64,
}

impl Void {
    pub fn contains(&self, p: Point) -> bool {
        p.distance(self.center) < self.radius
    }
}

/// The physical layout the topology was sampled from. Never shown to the
/// layout engine; used for ground truth only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruePlacement {
    pub positions: Vec<Point>,
    pub sensing_range: f64,
    pub communication_range: f64,
    pub voids: Vec<Void>,
}

/// Samples a unit-disk topology with planted voids.
pub fn generate_topology(config: &GeneratorConfig) -> Result<(Topology, TruePlacement)> {
    validate(config)?;
    let mut last_failure = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, attempt));
        let voids = sample_voids(&config.holes, &mut rng)?;
        let positions = place_nodes(config.nodes, &voids, config.placement, &mut rng)?;
        let (edges, communication_range) = connect(&positions, config.degree)?;
        let topology = Topology::from_canonical(config.nodes, edges);

        let giant = topology.components().first().map_or(0, Vec::len);
        if (giant as f64) < GIANT_COMPONENT_FRACTION * config.nodes as f64 {
            last_failure = format!(
                "largest component has {giant} of {} nodes",
                config.nodes
            );
            continue;
        }
        let placement = TruePlacement {
            positions,
            sensing_range: config.sensing.resolve(communication_range),
            communication_range,
            voids,
        };
        return Ok((topology, placement));
    }
    Err(Error::RetriesExhausted {
        attempts: MAX_ATTEMPTS,
        reason: last_failure,
    })
}

fn validate(config: &GeneratorConfig) -> Result<()> {
    if config.nodes < 2 {
        return Err(Error::invalid("need at least 2 nodes"));
    }
    if !(config.degree > 0.0 && config.degree.is_finite()) {
        return Err(Error::invalid("average degree must be positive"));
    }
    let h = &config.holes;
    if h.count > 0
        && !(h.radius_min > 0.0
            && h.radius_min <= h.radius_max
            && h.radius_max + VOID_BORDER < 0.5)
    {
        return Err(Error::invalid(format!(
            "void radius range [{}, {}] does not fit the unit square",
            h.radius_min, h.radius_max
        )));
    }
    let rs = config.sensing.resolve(1.0);
    if !(rs > 0.0 && rs.is_finite()) {
        return Err(Error::invalid("sensing range must be positive"));
    }
    Ok(())
}

/// SplitMix64 finalizer over `(seed, attempt)`.
fn derive_seed(seed: u64, attempt: u32) -> u64 {
    let mut z = seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_voids(spec: &HoleSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Void>> {
    let mut voids: Vec<Void> = Vec::with_capacity(spec.count);
    let mut tries = 0;
    while voids.len() < spec.count {
        tries += 1;
        if tries > VOID_SAMPLING_BUDGET {
            return Err(Error::RetriesExhausted {
                attempts: VOID_SAMPLING_BUDGET,
                reason: format!("could not fit {} separated voids", spec.count),
            });
        }
        let radius = if spec.radius_max > spec.radius_min {
            rng.random_range(spec.radius_min..spec.radius_max)
        } else {
            spec.radius_min
        };
        let lo = radius + VOID_BORDER;
        let hi = 1.0 - lo;
        let center = Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi));
        let separated = voids
            .iter()
            .all(|v| v.center.distance(center) > v.radius + radius + VOID_GAP);
        if separated {
            voids.push(Void { center, radius });
        }
    }
    Ok(voids)
}

fn place_nodes(
    n: usize,
    voids: &[Void],
    model: PlacementModel,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Point>> {
    let free_area = (1.0
        - voids
            .iter()
            .map(|v| std::f64::consts::PI * v.radius * v.radius)
            .sum::<f64>())
    .max(1e-6);
    let mut spacing = match model {
        PlacementModel::Uniform => 0.0,
        PlacementModel::BlueNoise => 0.75 * (free_area / n as f64).sqrt(),
    };
    let mut grid = SpatialGrid::new(spacing.max(1.0 / 256.0));
    let mut positions = Vec::with_capacity(n);
    let patience = 30 * n as u64;
    let mut failures = 0u64;
    let mut void_misses = 0u64;

    while positions.len() < n {
        let p = Point::new(rng.random::<f64>(), rng.random::<f64>());
        if voids.iter().any(|v| v.contains(p)) {
            void_misses += 1;
            if void_misses > 1_000 * patience {
                return Err(Error::invalid("voids leave no room for nodes"));
            }
            continue;
        }
        if spacing > 0.0 && grid.any_within(&positions, p, spacing) {
            failures += 1;
            if failures > patience {
                spacing *= 0.97;
                failures = 0;
            }
            continue;
        }
        grid.insert(positions.len(), p);
        positions.push(p);
    }
    Ok(positions)
}

/// Picks the communication range so that exactly `round(d·n/2)` pairs are
/// connected, placing the cut halfway between consecutive pair distances.
fn connect(positions: &[Point], degree: f64) -> Result<(Vec<(NodeId, NodeId)>, f64)> {
    let n = positions.len();
    let total_pairs = n * (n - 1) / 2;

    if degree >= (n - 1) as f64 {
        let all = pairs_within(positions, f64::INFINITY);
        let range = all.last().map_or(0.0, |p| p.0);
        let mut edges: Vec<_> = all.into_iter().map(|(_, u, v)| (u, v)).collect();
        edges.sort_unstable();
        return Ok((edges, range));
    }

    let target = ((degree * n as f64) / 2.0).round() as usize;
    let achieved = 2.0 * target as f64 / n as f64;
    if (achieved - degree).abs() > DEGREE_TOLERANCE || target > total_pairs {
        return Err(Error::DegreeUnreachable {
            target: degree,
            achieved: achieved.min((n - 1) as f64),
        });
    }

    // Expected range for a uniform field; grown until enough pairs are seen.
    let mut cutoff = 2.0 * (degree / (std::f64::consts::PI * n as f64)).sqrt();
    let pairs = loop {
        let pairs = pairs_within(positions, cutoff);
        if pairs.len() > target || cutoff >= std::f64::consts::SQRT_2 {
            break pairs;
        }
        cutoff = (cutoff * 2.0).min(std::f64::consts::SQRT_2);
    };

    let range = match target {
        0 => pairs.first().map_or(0.0, |p| p.0 / 2.0),
        t if t < pairs.len() => 0.5 * (pairs[t - 1].0 + pairs[t].0),
        _ => pairs.last().map_or(0.0, |p| p.0),
    };
    let mut edges: Vec<_> = pairs
        .into_iter()
        .take_while(|p| p.0 <= range)
        .map(|(_, u, v)| (u, v))
        .collect();
    edges.sort_unstable();

    let achieved = 2.0 * edges.len() as f64 / n as f64;
    if (achieved - degree).abs() > DEGREE_TOLERANCE {
        return Err(Error::DegreeUnreachable {
            target: degree,
            achieved,
        });
    }
    Ok((edges, range))
}

/// All pairs at distance `<= radius`, sorted by `(distance, u, v)`.
fn pairs_within(positions: &[Point], radius: f64) -> Vec<(f64, NodeId, NodeId)> {
    let n = positions.len();
    let mut out = Vec::new();
    if radius.is_infinite() || radius >= std::f64::consts::SQRT_2 {
        for u in 0..n {
            for v in u + 1..n {
                out.push((positions[u].distance(positions[v]), u, v));
            }
        }
    } else {
        let mut grid = SpatialGrid::new(radius.max(1e-9));
        for (i, &p) in positions.iter().enumerate() {
            grid.insert(i, p);
        }
        for (u, &p) in positions.iter().enumerate() {
            grid.for_each_near(p, |v| {
                if v > u {
                    let d = p.distance(positions[v]);
                    if d <= radius {
                        out.push((d, u, v));
                    }
                }
            });
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    out
}

/// Bucket grid over the unit square (points outside are clamped into the
/// border cells).
struct SpatialGrid {
    cell: f64,
    dim: usize,
    buckets: Vec<Vec<usize>>,
}

impl SpatialGrid {
    fn new(cell: f64) -> Self {
        // floor keeps the realized cell at least as wide as requested
        let dim = ((1.0 / cell).floor() as usize).clamp(1, 4096);
        SpatialGrid {
            cell: 1.0 / dim as f64,
            dim,
            buckets: vec![Vec::new(); dim * dim],
        }
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let clamp = |v: f64| ((v / self.cell).floor().max(0.0) as usize).min(self.dim - 1);
        (clamp(p.x), clamp(p.y))
    }

    fn insert(&mut self, id: usize, p: Point) {
        let (cx, cy) = self.cell_of(p);
        self.buckets[cy * self.dim + cx].push(id);
    }

    /// Visits ids in the 3×3 block of cells around `p`. Complete for any
    /// query radius up to the cell size, which `new` guarantees callers use.
    fn for_each_near(&self, p: Point, mut f: impl FnMut(usize)) {
        let (cx, cy) = self.cell_of(p);
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.dim - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.dim - 1) {
                for &id in &self.buckets[y * self.dim + x] {
                    f(id);
                }
            }
        }
    }

    fn any_within(&self, positions: &[Point], p: Point, radius: f64) -> bool {
        let mut hit = false;
        self.for_each_near(p, |id| hit |= positions[id].distance(p) < radius);
        hit
    }
}
