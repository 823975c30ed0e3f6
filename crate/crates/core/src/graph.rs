//! Labeled undirected graphs with fixed node positions in the unit square.

use std::collections::VecDeque;
use std::fmt;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node index {index} out of range for a graph with {n} nodes")]
    InvalidNode { index: usize, n: usize },
    #[error("self-loop requested at node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) already present")]
    EdgeExists(usize, usize),
    #[error("edge ({0}, {1}) not present")]
    EdgeMissing(usize, usize),
    #[error("a graph needs at least one node")]
    Empty,
    #[error("position {index} = ({x}, {y}) lies outside the unit square")]
    InvalidPosition { index: usize, x: f64, y: f64 },
    #[error("average path length is undefined on a disconnected graph")]
    Disconnected,
}

/// Zero-based node label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(index: usize) -> Self {
        NodeId(index)
    }
}

impl fmt::Display for NodeId {
    // one-based for humans
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

/// Ensemble summary statistics of a single graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub avg_degree: f64,
    /// Mean Euclidean length over the edge set, 0 for an edgeless graph.
    pub avg_edge_length: f64,
    /// Mean hop distance over unordered pairs; only computed on request.
    pub avg_path_length: Option<f64>,
}

/// Undirected simple graph whose nodes sit at fixed points of `[0,1]^2`.
///
/// Positions never change after construction; only the edge set is mutable.
#[derive(Debug, Clone)]
pub struct SpatialGraph {
    positions: Vec<Point>,
    adjacency: Vec<FxHashSet<usize>>,
    edge_count: usize,
}

impl PartialEq for SpatialGraph {
    fn eq(&self, other: &Self) -> bool {
        self.positions == other.positions && self.adjacency == other.adjacency
    }
}

impl SpatialGraph {
    /// Edgeless graph on the given positions.
    pub fn new(positions: Vec<Point>) -> Result<Self, GraphError> {
        if positions.is_empty() {
            return Err(GraphError::Empty);
        }
        if let Some((index, p)) = positions
            .iter()
            .enumerate()
            .find(|(_, p)| !p.in_unit_square())
        {
            return Err(GraphError::InvalidPosition {
                index,
                x: p.x,
                y: p.y,
            });
        }
        let n = positions.len();
        Ok(SpatialGraph {
            positions,
            adjacency: vec![FxHashSet::default(); n],
            edge_count: 0,
        })
    }

    pub fn from_edges(
        positions: Vec<Point>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut g = SpatialGraph::new(positions)?;
        for (i, j) in edges {
            g.add_edge(NodeId(i), NodeId(j))?;
        }
        Ok(g)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, i: NodeId) -> Result<Point, GraphError> {
        self.check_node(i)?;
        Ok(self.positions[i.0])
    }

    /// Euclidean distance between two nodes. Indices must be in range.
    #[inline]
    pub fn distance(&self, i: NodeId, j: NodeId) -> f64 {
        self.positions[i.0].distance(&self.positions[j.0])
    }

    pub fn degree(&self, i: NodeId) -> Result<usize, GraphError> {
        self.check_node(i)?;
        Ok(self.adjacency[i.0].len())
    }

    pub fn neighbors(&self, i: NodeId) -> Result<impl Iterator<Item = NodeId> + '_, GraphError> {
        self.check_node(i)?;
        Ok(self.adjacency[i.0].iter().map(|&j| NodeId(j)))
    }

    /// Edges as `(i, j)` with `i < j`, in ascending lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (i, adj) in self.adjacency.iter().enumerate() {
            let mut upper: Vec<usize> = adj.iter().copied().filter(|&j| j > i).collect();
            upper.sort_unstable();
            out.extend(upper.into_iter().map(|j| (i, j)));
        }
        out
    }

    fn check_node(&self, i: NodeId) -> Result<(), GraphError> {
        if i.0 < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::InvalidNode {
                index: i.0,
                n: self.node_count(),
            })
        }
    }

    fn check_pair(&self, i: NodeId, j: NodeId) -> Result<(), GraphError> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(GraphError::SelfLoop(i.0));
        }
        Ok(())
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> Result<bool, GraphError> {
        self.check_pair(i, j)?;
        Ok(self.contains_edge(i, j))
    }

    /// Unchecked lookup for callers that already validated the pair.
    #[inline]
    pub(crate) fn contains_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.adjacency[i.0].contains(&j.0)
    }

    pub fn add_edge(&mut self, i: NodeId, j: NodeId) -> Result<(), GraphError> {
        self.check_pair(i, j)?;
        if !self.adjacency[i.0].insert(j.0) {
            return Err(GraphError::EdgeExists(i.0.min(j.0), i.0.max(j.0)));
        }
        self.adjacency[j.0].insert(i.0);
        self.edge_count += 1;
        Ok(())
    }

    pub fn remove_edge(&mut self, i: NodeId, j: NodeId) -> Result<(), GraphError> {
        self.check_pair(i, j)?;
        if !self.adjacency[i.0].remove(&j.0) {
            return Err(GraphError::EdgeMissing(i.0.min(j.0), i.0.max(j.0)));
        }
        self.adjacency[j.0].remove(&i.0);
        self.edge_count -= 1;
        Ok(())
    }

    /// Breadth-first search from `i` that stops as soon as `j` is reached.
    pub fn has_path(&self, i: NodeId, j: NodeId) -> Result<bool, GraphError> {
        self.check_pair(i, j)?;
        Ok(self.path_exists(i.0, j.0))
    }

    pub(crate) fn path_exists(&self, from: usize, to: usize) -> bool {
        let mut visited = vec![false; self.node_count()];
        let mut queue = VecDeque::new();
        visited[from] = true;
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if v == to {
                    return true;
                }
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        false
    }

    /// Hop distances from `source`; `usize::MAX` marks unreachable nodes.
    fn bfs_distances(&self, source: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) {
        dist.fill(usize::MAX);
        queue.clear();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
    }

    fn reach_count(&self, source: usize, visited: &mut [bool], queue: &mut VecDeque<usize>) -> usize {
        visited[source] = true;
        queue.push_back(source);
        let mut count = 0;
        while let Some(u) = queue.pop_front() {
            count += 1;
            for &v in &self.adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.node_count()];
        let mut queue = VecDeque::new();
        self.reach_count(0, &mut visited, &mut queue) == self.node_count()
    }

    /// Maximal connected node sets, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut component = vec![usize::MAX; n];
        let mut components: Vec<Vec<NodeId>> = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![NodeId(start)];
            component[start] = id;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if component[v] == usize::MAX {
                        component[v] = id;
                        members.push(NodeId(v));
                        queue.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }

    /// Summary statistics. The average path length costs `O(N (N + |E|))`
    /// and is only computed when asked for.
    pub fn stats(&self, with_path_length: bool) -> Result<GraphStats, GraphError> {
        let n = self.node_count();
        let avg_degree = 2.0 * self.edge_count as f64 / n as f64;
        let avg_edge_length = if self.edge_count == 0 {
            0.0
        } else {
            let total: f64 = self
                .adjacency
                .iter()
                .enumerate()
                .flat_map(|(i, adj)| adj.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
                .map(|(i, j)| self.positions[i].distance(&self.positions[j]))
                .sum();
            total / self.edge_count as f64
        };
        let avg_path_length = if with_path_length {
            Some(self.average_path_length()?)
        } else {
            None
        };
        Ok(GraphStats {
            avg_degree,
            avg_edge_length,
            avg_path_length,
        })
    }

    fn average_path_length(&self) -> Result<f64, GraphError> {
        let n = self.node_count();
        if n < 2 {
            // no pairs; a single node is trivially at distance 0 from itself
            return Ok(0.0);
        }
        let mut dist = vec![0usize; n];
        let mut queue = VecDeque::with_capacity(n);
        let mut total: u64 = 0;
        for source in 0..n {
            self.bfs_distances(source, &mut dist, &mut queue);
            for &d in &dist[source + 1..] {
                if d == usize::MAX {
                    return Err(GraphError::Disconnected);
                }
                total += d as u64;
            }
        }
        let pairs = (n * (n - 1) / 2) as f64;
        Ok(total as f64 / pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<Point> {
        (0..n)
            .map(|i| Point::new(i as f64 / (n.max(2) - 1) as f64, 0.0))
            .collect()
    }

    fn n(i: usize) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn edge_operations() {
        let mut g = SpatialGraph::new(line(3)).unwrap();
        assert!(!g.has_edge(n(0), n(1)).unwrap());
        g.add_edge(n(0), n(1)).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(n(0), n(1)).unwrap());
        assert!(g.has_edge(n(1), n(0)).unwrap());
        assert_eq!(g.add_edge(n(1), n(0)), Err(GraphError::EdgeExists(0, 1)));
        g.remove_edge(n(1), n(0)).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(!g.has_edge(n(0), n(1)).unwrap());
        assert_eq!(g.remove_edge(n(0), n(1)), Err(GraphError::EdgeMissing(0, 1)));
    }

    #[test]
    fn argument_errors() {
        let g = SpatialGraph::new(line(3)).unwrap();
        assert_eq!(g.has_edge(n(1), n(1)), Err(GraphError::SelfLoop(1)));
        assert_eq!(
            g.has_edge(n(0), n(3)),
            Err(GraphError::InvalidNode { index: 3, n: 3 })
        );
        assert!(g.has_path(n(2), n(2)).is_err());
        assert_eq!(SpatialGraph::new(vec![]), Err(GraphError::Empty));
        assert!(matches!(
            SpatialGraph::new(vec![Point::new(0.5, 1.5)]),
            Err(GraphError::InvalidPosition { index: 0, .. })
        ));
    }

    #[test]
    fn paths_and_connectivity() {
        let g = SpatialGraph::from_edges(line(3), [(0, 1), (1, 2)]).unwrap();
        assert!(g.has_path(n(0), n(2)).unwrap());
        assert!(g.is_connected());

        let two = SpatialGraph::new(line(2)).unwrap();
        assert!(!two.has_path(n(0), n(1)).unwrap());
        assert!(!two.is_connected());

        let single = SpatialGraph::new(vec![Point::new(0.3, 0.3)]).unwrap();
        assert!(single.is_connected());

        let mut star = SpatialGraph::from_edges(line(5), (1..5).map(|j| (0, j))).unwrap();
        star.remove_edge(n(0), n(3)).unwrap();
        assert!(!star.has_path(n(0), n(3)).unwrap());
        assert!(star.has_path(n(1), n(4)).unwrap());
    }

    #[test]
    fn complete_graph_is_connected() {
        let corners = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        let k4 = SpatialGraph::from_edges(corners, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        assert!(k4.is_connected());
        assert_eq!(k4.stats(true).unwrap().avg_path_length, Some(1.0));
    }

    #[test]
    fn isolated_node_disconnects() {
        let g = SpatialGraph::from_edges(line(4), [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(!g.is_connected());
    }

    #[test]
    fn components() {
        let edgeless = SpatialGraph::new(line(3)).unwrap();
        assert_eq!(
            edgeless.connected_components(),
            vec![vec![n(0)], vec![n(1)], vec![n(2)]]
        );

        let path = SpatialGraph::from_edges(line(3), [(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.connected_components().len(), 1);

        let g = SpatialGraph::from_edges(line(5), [(0, 1), (1, 2), (0, 2), (3, 4)]).unwrap();
        let mut sizes: Vec<usize> = g.connected_components().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn stats_by_hand() {
        let positions = vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(1.0, 0.0),
        ];
        let g = SpatialGraph::from_edges(positions.clone(), [(0, 1), (1, 2)]).unwrap();
        let st = g.stats(true).unwrap();
        assert!((st.avg_degree - 4.0 / 3.0).abs() < 1e-15);
        assert!((st.avg_edge_length - 0.5).abs() < 1e-15);
        assert!((st.avg_path_length.unwrap() - 4.0 / 3.0).abs() < 1e-15);

        let empty = SpatialGraph::new(positions).unwrap();
        let st = empty.stats(false).unwrap();
        assert_eq!(st.avg_degree, 0.0);
        assert_eq!(st.avg_edge_length, 0.0);
        assert_eq!(st.avg_path_length, None);
        assert_eq!(empty.stats(true), Err(GraphError::Disconnected));
    }

    #[test]
    fn edges_sorted() {
        let g = SpatialGraph::from_edges(line(4), [(3, 1), (2, 0), (0, 1)]).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 3)]);
    }

    #[test]
    fn display_is_one_based() {
        assert_eq!(NodeId(0).to_string(), "1");
    }
}
