//! Brute-force reference implementations shared by the integration tests.
//! They are written for clarity, not speed, and share no code with the
//! library beyond its plain data types.

#![allow(dead_code)]

use std::collections::VecDeque;

use rand::Rng;
use wsnhole::{Point, Topology};

/// Interior uncovered components by depth-first flood fill: 4-connected,
/// not touching the border, at least `min_area` pixels. Each region is a
/// list of `(x, y)` in raster order; regions are sorted by area (largest
/// first), then by their first pixel in raster order.
pub fn flood_fill_holes(
    width: u32,
    height: u32,
    covered: &[bool],
    min_area: usize,
) -> Vec<Vec<(u32, u32)>> {
    let (w, h) = (width as i64, height as i64);
    let mut label = vec![usize::MAX; covered.len()];
    let mut regions = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if covered[i] || label[i] != usize::MAX {
                continue;
            }
            let id = regions.len();
            let mut pixels = Vec::new();
            let mut stack = vec![(x, y)];
            label[i] = id;
            while let Some((cx, cy)) = stack.pop() {
                pixels.push((cx as u32, cy as u32));
                for (nx, ny) in [(cx + 1, cy), (cx - 1, cy), (cx, cy + 1), (cx, cy - 1)] {
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if !covered[j] && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push((nx, ny));
                    }
                }
            }
            pixels.sort_by_key(|&(px, py)| (py, px));
            regions.push(pixels);
        }
    }
    let on_border = |&(x, y): &(u32, u32)| x == 0 || y == 0 || x == width - 1 || y == height - 1;
    let mut kept: Vec<_> = regions
        .into_iter()
        .filter(|r| r.len() >= min_area.max(1) && !r.iter().any(on_border))
        .collect();
    kept.sort_by_key(|r| (std::cmp::Reverse(r.len()), r[0].1, r[0].0));
    kept
}

/// Coverage by testing every pixel against every disk.
pub fn naive_coverage(width: u32, height: u32, centres: &[Point], rs: f64) -> Vec<bool> {
    let mut out = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            let p = Point::new(x as f64, y as f64);
            out.push(centres.iter().any(|c| {
                let (dx, dy) = (p.x - c.x, p.y - c.y);
                dx * dx + dy * dy <= rs * rs
            }));
        }
    }
    out
}

/// Nodes within `tol` of some pixel of some hole, checked exhaustively.
pub fn nodes_near_pixels(node_pixels: &[Point], holes: &[Vec<(u32, u32)>], tol: f64) -> Vec<usize> {
    (0..node_pixels.len())
        .filter(|&v| {
            let p = node_pixels[v];
            holes.iter().flatten().any(|&(x, y)| {
                let (dx, dy) = (x as f64 - p.x, y as f64 - p.y);
                dx * dx + dy * dy <= tol * tol
            })
        })
        .collect()
}

/// All-pairs hop counts by breadth-first search; `None` when unreachable.
pub fn bfs_hops(t: &Topology) -> Vec<Vec<Option<u32>>> {
    let n = t.node_count();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in t.edges() {
        adj[u].push(v);
        adj[v].push(u);
    }
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if dist[v].is_none() {
                        dist[v] = Some(dist[u].unwrap() + 1);
                        q.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Spring energy written out directly: stiffness `k/d²`, rest length
/// `l0·d`, unreachable pairs at one hop more than the diameter.
pub fn reference_energy(
    hops: &[Vec<Option<u32>>],
    positions: &[Point],
    measured: &[bool],
    k: f64,
    l0: f64,
) -> f64 {
    let n = positions.len();
    let diameter = hops.iter().flatten().flatten().copied().max().unwrap_or(0);
    let mut e = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            if !(measured[u] && measured[v]) {
                continue;
            }
            let d = hops[u][v].unwrap_or(diameter + 1) as f64;
            let dist = ((positions[u].x - positions[v].x).powi(2)
                + (positions[u].y - positions[v].y).powi(2))
            .sqrt();
            e += 0.5 * (k / (d * d)) * (dist - l0 * d).powi(2);
        }
    }
    e
}

/// Random simple graph on `n` nodes; not necessarily connected.
pub fn random_topology(rng: &mut impl Rng, n: usize, edge_probability: f64) -> Topology {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(edge_probability) {
                edges.push((u, v));
            }
        }
    }
    Topology::new(n, edges).expect("valid edges")
}

pub fn cycle(n: usize) -> Topology {
    Topology::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
}

/// Coefficient of variation of the edge lengths.
pub fn edge_length_cv(t: &Topology, positions: &[Point]) -> f64 {
    let lens: Vec<f64> = t
        .edges()
        .iter()
        .map(|&(u, v)| positions[u].distance(positions[v]))
        .collect();
    let mean = lens.iter().sum::<f64>() / lens.len() as f64;
    let var = lens.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / lens.len() as f64;
    var.sqrt() / mean
}
