//! Sensor network topologies: node IDs plus an undirected edge list, which
//! is everything the layout engine is allowed to see.

mod generate;
mod io;

use std::collections::VecDeque;

pub use generate::{
    generate_topology, GeneratorConfig, HoleSpec, PlacementModel, SensingRule, TruePlacement, Void,
    DEGREE_TOLERANCE, GIANT_COMPONENT_FRACTION, MAX_ATTEMPTS,
};
pub use io::{parse_placement_csv, write_placement_csv};

use crate::error::{Error, Result};

/// Dense node identifier in `0..node_count`.
pub type NodeId = usize;

/// An undirected simple graph on nodes `0..node_count`.
///
/// Edges are stored canonically as `(min, max)` pairs in sorted order, so two
/// topologies with the same edge set compare equal regardless of how they were
/// built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Builds a topology, rejecting self-loops, duplicate edges (in either
    /// orientation) and out-of-range endpoints.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "edge ({u}, {v}) has an endpoint outside 0..{node_count}"
                )));
            }
            if u == v {
                return Err(Error::InvalidTopology(format!("self-loop on node {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidTopology(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_canonical(node_count, canon))
    }

    /// `edges` must already be canonical, sorted and unique.
    pub(crate) fn from_canonical(node_count: usize, edges: Vec<(NodeId, NodeId)>) -> Self {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Topology {
            node_count,
            edges,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// `2·|E| / n`.
    pub fn average_degree(&self) -> Result<f64> {
        if self.node_count == 0 {
            return Err(Error::InvalidTopology(
                "average degree of an empty topology".into(),
            ));
        }
        Ok(2.0 * self.edges.len() as f64 / self.node_count as f64)
    }

    /// Multi-source BFS. `None` marks nodes unreachable from every source.
    pub fn hop_distance(&self, sources: &[NodeId]) -> Result<Vec<Option<u32>>> {
        if sources.is_empty() {
            return Err(Error::invalid("hop_distance needs at least one source"));
        }
        if let Some(&bad) = sources.iter().find(|&&s| s >= self.node_count) {
            return Err(Error::invalid(format!("source node {bad} out of range")));
        }
        let mut hops = vec![None; self.node_count];
        let mut queue = VecDeque::new();
        for &s in sources {
            if hops[s].is_none() {
                hops[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let next = hops[u].map(|h| h + 1);
            for &w in &self.adjacency[u] {
                if hops[w].is_none() {
                    hops[w] = next;
                    queue.push_back(w);
                }
            }
        }
        Ok(hops)
    }

    /// Connected components as sorted node lists, largest first (ties by
    /// smallest member).
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.node_count];
        let mut out = Vec::new();
        for start in 0..self.node_count {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &w in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        out
    }

    /// Parses the edge-list format: first line the node count, then one
    /// `u v` pair per nonempty line.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (header_line, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing node count"))?;
        let node_count: usize = header
            .parse()
            .map_err(|_| Error::parse(header_line, format!("bad node count `{header}`")))?;

        let mut edges = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (line, content) in lines {
            let mut fields = content.split_whitespace();
            let mut id = |what: &str| -> Result<NodeId> {
                let raw = fields
                    .next()
                    .ok_or_else(|| Error::parse(line, format!("missing {what} node ID")))?;
                raw.parse()
                    .map_err(|_| Error::parse(line, format!("malformed node ID `{raw}`")))
            };
            let u = id("first")?;
            let v = id("second")?;
            if fields.next().is_some() {
                return Err(Error::parse(line, "expected exactly two node IDs"));
            }
            if u >= node_count || v >= node_count {
                return Err(Error::parse(line, "node ID out of range"));
            }
            if u == v {
                return Err(Error::parse(line, "self-loop"));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::parse(line, "duplicate edge"));
            }
            edges.push(key);
        }
        edges.sort_unstable();
        Ok(Self::from_canonical(node_count, edges))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(12 * (self.edges.len() + 1));
        out.push_str(&self.node_count.to_string());
        out.push('\n');
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// All-pairs hop distances.
    pub fn hop_matrix(&self) -> HopMatrix {
        HopMatrix::new(self)
    }
}

/// Dense all-pairs hop-count table (row-major, `n × n`).
#[derive(Debug, Clone)]
pub struct HopMatrix {
    n: usize,
    hops: Vec<u16>,
    diameter: u16,
}

impl HopMatrix {
    pub const UNREACHABLE: u16 = u16::MAX;

    pub fn new(t: &Topology) -> Self {
        let n = t.node_count();
        let mut hops = vec![Self::UNREACHABLE; n * n];
        let mut queue = VecDeque::with_capacity(n);
        let mut diameter = 0;
        for s in 0..n {
            let row = &mut hops[s * n..(s + 1) * n];
            row[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let next = row[u] + 1;
                for &w in t.neighbors(u) {
                    if row[w] == Self::UNREACHABLE {
                        row[w] = next;
                        diameter = diameter.max(next);
                        queue.push_back(w);
                    }
                }
            }
        }
        HopMatrix { n, hops, diameter }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Hop count, or `None` if `u` and `v` are in different components.
    pub fn get(&self, u: NodeId, v: NodeId) -> Option<u16> {
        let h = self.hops[u * self.n + v];
        (h != Self::UNREACHABLE).then_some(h)
    }

    pub fn row(&self, u: NodeId) -> &[u16] {
        &self.hops[u * self.n..(u + 1) * self.n]
    }

    /// Largest finite hop count.
    pub fn diameter(&self) -> u16 {
        self.diameter
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(n: usize) -> Topology {
        Topology::new(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    #[test]
    fn average_degree_examples() {
        let empty = Topology::new(4, []).unwrap();
        assert_eq!(empty.average_degree().unwrap(), 0.0);
        let triangle = Topology::new(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(triangle.average_degree().unwrap(), 2.0);
        assert!(Topology::new(0, []).unwrap().average_degree().is_err());
    }

    #[test]
    fn average_degree_of_500_nodes_and_1500_edges_is_six() {
        let edges: Vec<_> = (0..500)
            .flat_map(|u| (1..=3).map(move |k| (u, (u + k) % 500)))
            .collect();
        let t = Topology::new(500, edges).unwrap();
        assert_eq!(t.edge_count(), 1500);
        assert_eq!(t.average_degree().unwrap(), 6.0);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Topology::new(3, [(0, 0)]).is_err());
        assert!(Topology::new(3, [(0, 3)]).is_err());
        assert!(Topology::new(3, [(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn hop_distance_examples() {
        let t = path(3);
        let hops = t.hop_distance(&[0]).unwrap();
        assert_eq!(hops, vec![Some(0), Some(1), Some(2)]);

        let split = Topology::new(4, [(0, 1), (2, 3)]).unwrap();
        let hops = split.hop_distance(&[0]).unwrap();
        assert_eq!(hops, vec![Some(0), Some(1), None, None]);

        assert!(t.hop_distance(&[]).is_err());
        assert!(t.hop_distance(&[7]).is_err());
    }

    #[test]
    fn hop_matrix_matches_bfs() {
        let t = Topology::new(5, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let m = t.hop_matrix();
        assert_eq!(m.get(0, 3), Some(3));
        assert_eq!(m.get(3, 0), Some(3));
        assert_eq!(m.get(4, 0), None);
        assert_eq!(m.get(4, 4), Some(0));
        assert_eq!(m.diameter(), 3);
    }

    #[test]
    fn parse_literal() {
        let t = Topology::parse_edge_list("3\n0 1\n1 2\n").unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Topology::parse_edge_list("3\n0 3\n").unwrap_err();
        assert_eq!(err.to_string(), "node ID out of range at line 2");
        let err = Topology::parse_edge_list("3\n0 1\n\n1 1\n").unwrap_err();
        assert_eq!(err.to_string(), "self-loop at line 4");
        let err = Topology::parse_edge_list("3\n0 1\n1 0\n").unwrap_err();
        assert_eq!(err.to_string(), "duplicate edge at line 3");
        let err = Topology::parse_edge_list("3\n0 x\n").unwrap_err();
        assert!(err.to_string().ends_with("at line 2"), "{err}");
        let err = Topology::parse_edge_list("3\n0 1 2\n").unwrap_err();
        assert!(err.to_string().ends_with("at line 2"), "{err}");
        assert!(Topology::parse_edge_list("").is_err());
        assert!(Topology::parse_edge_list("many\n").is_err());
    }

    #[test]
    fn serialize_sorts_canonically() {
        let t = Topology::new(4, [(3, 2), (1, 0), (2, 0)]).unwrap();
        assert_eq!(t.to_edge_list(), "4\n0 1\n0 2\n2 3\n");
    }

    #[test]
    fn components_largest_first() {
        let t = Topology::new(6, [(4, 5), (0, 1), (1, 2)]).unwrap();
        assert_eq!(t.components(), vec![vec![0, 1, 2], vec![4, 5], vec![3]]);
    }

    fn arb_topology() -> impl Strategy<Value = Topology> {
        (1usize..40).prop_flat_map(|n| {
            proptest::collection::btree_set((0..n, 0..n), 0..(n * 3))
                .prop_map(move |pairs| {
                    let edges: std::collections::BTreeSet<_> = pairs
                        .into_iter()
                        .filter(|(u, v)| u != v)
                        .map(|(u, v)| (u.min(v), u.max(v)))
                        .collect();
                    Topology::new(n, edges).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn edge_list_round_trip(t in arb_topology()) {
            let back = Topology::parse_edge_list(&t.to_edge_list()).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn hops_respect_edges(t in arb_topology(), src in 0usize..40) {
            let src = src % t.node_count();
            let hops = t.hop_distance(&[src]).unwrap();
            for &(u, v) in t.edges() {
                match (hops[u], hops[v]) {
                    (Some(a), Some(b)) => prop_assert!(a.abs_diff(b) <= 1),
                    (None, None) => {}
                    _ => prop_assert!(false, "edge crosses reachability"),
                }
            }
        }
    }
}
