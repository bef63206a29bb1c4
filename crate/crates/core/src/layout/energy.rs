use crate::geom::Point;
use crate::topology::{HopMatrix, NodeId};

/// Kamada-Kawai spring system over hop distances.
///
/// Every measured pair `(u, v)` is a spring with stiffness `K / d²` and rest
/// length `L0 · d`, where `d` is the hop count. Pairs in different
/// components use `d = diameter + 1`.
#[derive(Debug, Clone, Copy)]
pub struct SpringModel<'a> {
    hops: &'a HopMatrix,
    spring_constant: f64,
    edge_length: f64,
    fallback_hops: u16,
}

impl<'a> SpringModel<'a> {
    pub fn new(hops: &'a HopMatrix, spring_constant: f64, edge_length: f64) -> Self {
        SpringModel {
            hops,
            spring_constant,
            edge_length,
            fallback_hops: hops.diameter().saturating_add(1),
        }
    }

    pub fn node_count(&self) -> usize {
        self.hops.node_count()
    }

    pub fn edge_length(&self) -> f64 {
        self.edge_length
    }

    pub fn hops(&self) -> &'a HopMatrix {
        self.hops
    }

    /// Hop count used for the spring between `u` and `v`.
    #[inline]
    pub fn pair_hops(&self, u: NodeId, v: NodeId) -> u16 {
        self.hops.get(u, v).unwrap_or(self.fallback_hops)
    }

    #[inline]
    fn spring(&self, d: u16) -> (f64, f64) {
        let d = d as f64;
        (self.spring_constant / (d * d), self.edge_length * d)
    }

    /// `∂E_uv/∂p_v` for one spring.
    #[inline]
    pub fn pair_gradient(&self, positions: &[Point], v: NodeId, u: NodeId) -> Point {
        let (k, rest) = self.spring(self.pair_hops(u, v));
        spring_gradient(positions[v], positions[u], k, rest, v, u)
    }

    /// `∂E_uv/∂p_v` with explicit endpoint positions.
    #[inline]
    pub fn pair_gradient_at(&self, pv: Point, pu: Point, v: NodeId, u: NodeId) -> Point {
        let (k, rest) = self.spring(self.pair_hops(u, v));
        spring_gradient(pv, pu, k, rest, v, u)
    }

    /// Energy over pairs whose endpoints both satisfy `measured`.
    pub fn energy(&self, positions: &[Point], measured: &[bool]) -> f64 {
        let n = positions.len();
        let mut total = 0.0;
        for u in (0..n).filter(|&u| measured[u]) {
            let row = self.hops.row(u);
            for v in (u + 1..n).filter(|&v| measured[v]) {
                let d = if row[v] == HopMatrix::UNREACHABLE {
                    self.fallback_hops
                } else {
                    row[v]
                };
                let (k, rest) = self.spring(d);
                let stretch = positions[u].distance(positions[v]) - rest;
                total += 0.5 * k * stretch * stretch;
            }
        }
        total
    }

    /// Energy of the whole graph, every pair measured.
    pub fn total_energy(&self, positions: &[Point]) -> f64 {
        self.energy(positions, &vec![true; positions.len()])
    }

    /// Analytic gradient of [`SpringModel::energy`] with respect to `v`.
    pub fn gradient(&self, positions: &[Point], measured: &[bool], v: NodeId) -> Point {
        let row = self.hops.row(v);
        let pv = positions[v];
        let mut g = Point::ORIGIN;
        for (u, &pu) in positions.iter().enumerate() {
            if u == v || !measured[u] {
                continue;
            }
            let d = if row[u] == HopMatrix::UNREACHABLE {
                self.fallback_hops
            } else {
                row[u]
            };
            let (k, rest) = self.spring(d);
            g += spring_gradient(pv, pu, k, rest, v, u);
        }
        g
    }

    /// Sum of spring stiffnesses at `v`; bounds the curvature of the energy
    /// along `v`'s coordinates.
    pub fn curvature_bound(&self, measured: &[bool], v: NodeId) -> f64 {
        let row = self.hops.row(v);
        (0..row.len())
            .filter(|&u| u != v && measured[u])
            .map(|u| {
                let d = if row[u] == HopMatrix::UNREACHABLE {
                    self.fallback_hops
                } else {
                    row[u]
                };
                self.spring(d).0
            })
            .sum()
    }
}

#[inline]
fn spring_gradient(pv: Point, pu: Point, k: f64, rest: f64, v: NodeId, u: NodeId) -> Point {
    let delta = pv - pu;
    let dist = delta.norm();
    if dist > 0.0 {
        delta * (k * (dist - rest) / dist)
    } else {
        coincident_direction(v, u) * (-k * rest)
    }
}

/// Unit vector pointing from `u` towards `v` for coincident endpoints,
/// derived from the IDs only.
pub fn coincident_direction(v: NodeId, u: NodeId) -> Point {
    let (lo, hi) = (u.min(v) as u64, u.max(v) as u64);
    let h = (lo.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ hi.wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
        .wrapping_mul(0x1656_67B1_9E37_79F9);
    let angle = (h >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
    let dir = Point::new(angle.cos(), angle.sin());
    if v as u64 == hi {
        dir
    } else {
        dir * -1.0
    }
}
