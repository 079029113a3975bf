//! Communication graphs: construction of the standard families, BFS
//! distances, hop neighborhoods, and the shared rooted spanning tree used by
//! the bounded-communication policies.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("{family} requires {requirement}, got m={m}")]
    InvalidSize { family: &'static str, requirement: &'static str, m: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("malformed edge list: {0}")]
    Malformed(String),
}

/// Named graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Line,
    Cycle,
    Star,
    Grid,
    Complete,
    RandomConnected,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Topology::Line => "line",
            Topology::Cycle => "cycle",
            Topology::Star => "star",
            Topology::Grid => "grid",
            Topology::Complete => "complete",
            Topology::RandomConnected => "random-connected",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Topology {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" | "path" => Ok(Topology::Line),
            "cycle" => Ok(Topology::Cycle),
            "star" => Ok(Topology::Star),
            "grid" => Ok(Topology::Grid),
            "complete" => Ok(Topology::Complete),
            "random-connected" => Ok(Topology::RandomConnected),
            other => Err(GraphError::Malformed(format!("unknown topology `{other}`"))),
        }
    }
}

/// Undirected connected graph with precomputed all-pairs hop distances
/// (m BFS passes). Immutable once built; safe to share across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    pub m: usize,
    /// Sorted neighbor lists, no self-loops.
    pub adjacency: Vec<Vec<usize>>,
    /// dist[v][u] = hop distance.
    pub dist: Vec<Vec<u32>>,
}

impl CommGraph {
    /// Builds from an undirected edge list, validating connectivity.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if m == 0 {
            return Err(GraphError::InvalidSize { family: "graph", requirement: "m >= 1", m });
        }
        let mut adjacency = vec![Vec::new(); m];
        for &(u, v) in edges {
            if u >= m || v >= m || u == v {
                return Err(GraphError::InvalidEdge(u, v));
            }
            if !adjacency[u].contains(&v) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let dist = all_pairs_bfs(&adjacency)?;
        Ok(CommGraph { m, adjacency, dist })
    }

    pub fn distance(&self, v: usize, u: usize) -> u32 {
        self.dist[v][u]
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().flat_map(|row| row.iter().copied()).max().unwrap_or(0)
    }

    /// |N_{<=d}(v)|: vertices within hop distance floor(d) of v, v included.
    /// Fractional radii floor because hop distances are integral.
    pub fn neighborhood_size(&self, v: usize, d: f64) -> usize {
        let radius = d.max(0.0).floor() as u32;
        self.dist[v].iter().filter(|&&x| x <= radius).count()
    }
}

fn all_pairs_bfs(adjacency: &[Vec<usize>]) -> Result<Vec<Vec<u32>>, GraphError> {
    let m = adjacency.len();
    let mut dist = vec![vec![u32::MAX; m]; m];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..m {
        let row = &mut dist[start];
        row[start] = 0;
        queue.clear();
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            let dv = row[v];
            for &u in &adjacency[v] {
                if row[u] == u32::MAX {
                    row[u] = dv + 1;
                    queue.push_back(u);
                }
            }
        }
        if row.iter().any(|&x| x == u32::MAX) {
            return Err(GraphError::Disconnected);
        }
    }
    Ok(dist)
}

/// Generates a connected graph of the named family. The rng is consumed only
/// by `RandomConnected`; pass any rng for the deterministic families.
pub fn generate(topology: Topology, m: usize, rng: &mut impl Rng) -> Result<CommGraph, GraphError> {
    match topology {
        Topology::Line => {
            let edges: Vec<_> = (1..m).map(|v| (v - 1, v)).collect();
            CommGraph::from_edges(m, &edges)
        }
        Topology::Cycle => {
            if m < 3 {
                return Err(GraphError::InvalidSize { family: "cycle", requirement: "m >= 3", m });
            }
            let mut edges: Vec<_> = (1..m).map(|v| (v - 1, v)).collect();
            edges.push((m - 1, 0));
            CommGraph::from_edges(m, &edges)
        }
        Topology::Star => {
            let edges: Vec<_> = (1..m).map(|v| (0, v)).collect();
            CommGraph::from_edges(m, &edges)
        }
        Topology::Grid => {
            let side = (m as f64).sqrt().round() as usize;
            if side * side != m {
                return Err(GraphError::InvalidSize { family: "grid", requirement: "m a perfect square", m });
            }
            let mut edges = Vec::new();
            for r in 0..side {
                for c in 0..side {
                    let v = r * side + c;
                    if c + 1 < side {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < side {
                        edges.push((v, v + side));
                    }
                }
            }
            CommGraph::from_edges(m, &edges)
        }
        Topology::Complete => {
            let mut edges = Vec::new();
            for v in 0..m {
                for u in v + 1..m {
                    edges.push((v, u));
                }
            }
            CommGraph::from_edges(m, &edges)
        }
        Topology::RandomConnected => {
            if m == 1 {
                return CommGraph::from_edges(1, &[]);
            }
            // Erdős–Rényi at the connectivity threshold, retried a few times,
            // then augmented into connectivity by bridging components.
            let p = (((m as f64).ln() + 1.0) / m as f64).min(1.0);
            for _attempt in 0..8 {
                let mut edges = Vec::new();
                for v in 0..m {
                    for u in v + 1..m {
                        if rng.random::<f64>() < p {
                            edges.push((v, u));
                        }
                    }
                }
                match CommGraph::from_edges(m, &edges) {
                    Ok(g) => return Ok(g),
                    Err(GraphError::Disconnected) => continue,
                    Err(e) => return Err(e),
                }
            }
            let mut edges = Vec::new();
            for v in 0..m {
                for u in v + 1..m {
                    if rng.random::<f64>() < p {
                        edges.push((v, u));
                    }
                }
            }
            bridge_components(m, &mut edges, rng);
            CommGraph::from_edges(m, &edges)
        }
    }
}

/// Adds one edge per missing link between the component containing vertex 0
/// and each remaining component, picking endpoints uniformly.
fn bridge_components(m: usize, edges: &mut Vec<(usize, usize)>, rng: &mut impl Rng) {
    let mut comp = vec![usize::MAX; m];
    let mut adjacency = vec![Vec::new(); m];
    for &(u, v) in edges.iter() {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..m {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &u in &adjacency[v] {
                if comp[u] == usize::MAX {
                    comp[u] = id;
                    members.push(u);
                    stack.push(u);
                }
            }
        }
        components.push(members);
    }
    let base = components[0].clone();
    for other in components.iter().skip(1) {
        let a = base[rng.random_range(0..base.len())];
        let b = other[rng.random_range(0..other.len())];
        edges.push((a.min(b), a.max(b)));
    }
}

/// Parses the edge-list text format: first line `m`, then one `u v` pair per
/// line, 0-indexed. Blank lines and `#` comments are skipped.
pub fn from_edge_list(text: &str) -> Result<CommGraph, GraphError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let m: usize = lines
        .next()
        .ok_or_else(|| GraphError::Malformed("empty file".into()))?
        .parse()
        .map_err(|e| GraphError::Malformed(format!("bad vertex count: {e}")))?;
    let mut edges = Vec::new();
    for line in lines {
        let mut it = line.split_whitespace();
        let u: usize = it
            .next()
            .ok_or_else(|| GraphError::Malformed(format!("bad edge line: {line:?}")))?
            .parse()
            .map_err(|e| GraphError::Malformed(format!("bad edge line {line:?}: {e}")))?;
        let v: usize = it
            .next()
            .ok_or_else(|| GraphError::Malformed(format!("bad edge line: {line:?}")))?
            .parse()
            .map_err(|e| GraphError::Malformed(format!("bad edge line {line:?}: {e}")))?;
        if it.next().is_some() {
            return Err(GraphError::Malformed(format!("trailing tokens in {line:?}")));
        }
        edges.push((u, v));
    }
    CommGraph::from_edges(m, &edges)
}

/// Rooted spanning tree shared by all agents. Built by BFS with ascending
/// vertex-index tie-breaking, so identical inputs yield identical trees.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub root: usize,
    /// parent[v]; None exactly at the root.
    pub parent: Vec<Option<usize>>,
    /// Hop distance to the root inside the tree (= graph distance, BFS).
    pub depth: Vec<u32>,
    pub children: Vec<Vec<usize>>,
    /// All-pairs distances inside the tree.
    pub tree_dist: Vec<Vec<u32>>,
}

impl SpanningTree {
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.children[v].len() + 1);
        if let Some(p) = self.parent[v] {
            out.push(p);
        }
        out.extend_from_slice(&self.children[v]);
        out.sort_unstable();
        out
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.parent.len()).filter_map(|v| self.parent[v].map(|p| (p, v))).collect()
    }

    /// True if `anc` lies on the root path of `v` (v counts as its own ancestor).
    pub fn is_ancestor(&self, anc: usize, v: usize) -> bool {
        let mut cur = v;
        loop {
            if cur == anc {
                return true;
            }
            match self.parent[cur] {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }
}

/// BFS tree from `root`; neighbor exploration in ascending index order.
pub fn build_spanning_tree(g: &CommGraph, root: usize) -> SpanningTree {
    let m = g.m;
    let mut parent = vec![None; m];
    let mut depth = vec![0u32; m];
    let mut seen = vec![false; m];
    let mut queue = std::collections::VecDeque::new();
    seen[root] = true;
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        for &u in &g.adjacency[v] {
            if !seen[u] {
                seen[u] = true;
                parent[u] = Some(v);
                depth[u] = depth[v] + 1;
                queue.push_back(u);
            }
        }
    }
    debug_assert!(seen.iter().all(|&s| s), "graph validated connected on construction");
    let mut children = vec![Vec::new(); m];
    for v in 0..m {
        if let Some(p) = parent[v] {
            children[p].push(v);
        }
    }
    // Tree distances via depth + LCA over parent pointers; m is desk-scale so
    // the quadratic walk is fine.
    let mut tree_dist = vec![vec![0u32; m]; m];
    for v in 0..m {
        for u in v + 1..m {
            let mut a = v;
            let mut b = u;
            while depth[a] > depth[b] {
                a = parent[a].unwrap();
            }
            while depth[b] > depth[a] {
                b = parent[b].unwrap();
            }
            while a != b {
                a = parent[a].unwrap();
                b = parent[b].unwrap();
            }
            let d = depth[v] + depth[u] - 2 * depth[a];
            tree_dist[v][u] = d;
            tree_dist[u][v] = d;
        }
    }
    SpanningTree { root, parent, depth, children, tree_dist }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::graph_stream;

    fn gen(t: Topology, m: usize) -> CommGraph {
        generate(t, m, &mut graph_stream(0)).unwrap()
    }

    #[test]
    fn line_family() {
        let g = gen(Topology::Line, 5);
        assert_eq!(g.diameter(), 4);
        assert_eq!(g.neighborhood_size(2, 1.0), 3);
        assert_eq!(g.neighborhood_size(2, 2.0), 5);
    }

    #[test]
    fn complete_family() {
        let g = gen(Topology::Complete, 4);
        assert_eq!(g.diameter(), 1);
        for v in 0..4 {
            assert_eq!(g.neighborhood_size(v, 1.0), 4);
        }
    }

    #[test]
    fn cycle_family() {
        let g = gen(Topology::Cycle, 6);
        assert_eq!(g.diameter(), 3);
        for v in 0..6 {
            assert_eq!(g.neighborhood_size(v, 2.0), 5);
        }
        let g8 = gen(Topology::Cycle, 8);
        assert_eq!(g8.neighborhood_size(0, 2.5), 5, "radius floors to 2");
    }

    #[test]
    fn neighborhood_of_radius_zero_is_self() {
        for t in [Topology::Line, Topology::Star, Topology::Complete] {
            let g = gen(t, 5);
            for v in 0..5 {
                assert_eq!(g.neighborhood_size(v, 0.0), 1);
            }
        }
    }

    #[test]
    fn grid_family() {
        let g = gen(Topology::Grid, 9);
        assert_eq!(g.diameter(), 4);
        assert_eq!(g.adjacency[4], vec![1, 3, 5, 7]);
        assert!(generate(Topology::Grid, 8, &mut graph_stream(0)).is_err());
    }

    #[test]
    fn random_connected_is_connected_at_various_sizes() {
        for m in [1, 2, 5, 12, 40] {
            for seed in 0..5 {
                let g = generate(Topology::RandomConnected, m, &mut graph_stream(seed)).unwrap();
                assert_eq!(g.m, m);
                assert!(g.dist.iter().flatten().all(|&d| d != u32::MAX));
            }
        }
    }

    #[test]
    fn min_neighborhood_lower_bound_holds() {
        // Connected graph: |N_{<=tau}(v)| >= min(tau, m) for every v, integer tau.
        let mut rng = graph_stream(3);
        let mut graphs = vec![
            gen(Topology::Line, 7),
            gen(Topology::Cycle, 9),
            gen(Topology::Star, 6),
            gen(Topology::Grid, 16),
            gen(Topology::Complete, 5),
        ];
        graphs.push(generate(Topology::RandomConnected, 11, &mut rng).unwrap());
        for g in &graphs {
            for v in 0..g.m {
                for tau in 0..=(g.m + 2) {
                    assert!(
                        g.neighborhood_size(v, tau as f64) >= tau.min(g.m),
                        "m={} v={v} tau={tau}",
                        g.m
                    );
                }
            }
        }
    }

    #[test]
    fn bfs_tree_on_line_and_complete() {
        let line = gen(Topology::Line, 4);
        let t = build_spanning_tree(&line, 0);
        assert_eq!(t.parent, vec![None, Some(0), Some(1), Some(2)]);
        assert_eq!(t.depth, vec![0, 1, 2, 3]);

        let complete = gen(Topology::Complete, 3);
        let t = build_spanning_tree(&complete, 0);
        assert_eq!(t.parent, vec![None, Some(0), Some(0)]);
        assert_eq!(t.depth, vec![0, 1, 1]);
    }

    #[test]
    fn bfs_tree_on_cycle_breaks_ties_by_index() {
        let g = gen(Topology::Cycle, 4);
        let t = build_spanning_tree(&g, 0);
        assert_eq!(t.depth, vec![0, 1, 2, 1]);
        assert_eq!(t.parent, vec![None, Some(0), Some(1), Some(0)]);
        assert_eq!(t.tree_dist[2][3], 3, "tree distance exceeds graph distance 1");
        assert_eq!(g.distance(2, 3), 1);
    }

    #[test]
    fn tree_depth_equals_graph_distance_and_edges_are_real() {
        let mut rng = graph_stream(9);
        for m in [2, 6, 13] {
            let g = generate(Topology::RandomConnected, m, &mut rng).unwrap();
            let t = build_spanning_tree(&g, 0);
            assert_eq!(t.edges().len(), m - 1);
            for v in 0..m {
                assert_eq!(t.depth[v], g.distance(0, v));
                if let Some(p) = t.parent[v] {
                    assert!(g.adjacency[v].contains(&p));
                }
            }
            // treeDist(v,u) = depth(v)+depth(u)-2*depth(lca)
            for v in 0..m {
                assert_eq!(t.tree_dist[v][v], 0);
                for u in 0..m {
                    assert!(t.tree_dist[v][u] >= g.distance(v, u));
                }
            }
        }
    }

    #[test]
    fn tree_construction_is_deterministic() {
        let g = gen(Topology::Grid, 16);
        let a = build_spanning_tree(&g, 5);
        let b = build_spanning_tree(&g, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn edge_list_round_trip() {
        let text = "4\n0 1\n1 2\n2 3\n";
        let g = from_edge_list(text).unwrap();
        assert_eq!(g.m, 4);
        assert_eq!(g.diameter(), 3);
        assert!(from_edge_list("3\n0 1\n").is_err(), "disconnected");
        assert!(from_edge_list("2\n0 2\n").is_err(), "vertex out of range");
        assert!(from_edge_list("").is_err());
    }
}
