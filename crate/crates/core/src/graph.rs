//! Undirected simple graphs on nodes `1..=n`, node sets, induced subgraphs
//! and selection matrices.
//!
//! Every public function speaks 1-based node identifiers. Matrices built
//! from a graph are indexed by position, so node `i` lives in row `i - 1`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending list of distinct 1-based node identifiers.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet(Vec::new())
    }

    /// All nodes `1..=n`.
    pub fn full(n: usize) -> Self {
        NodeSet((1..=n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    pub fn insert(&mut self, node: usize) -> bool {
        match self.0.binary_search(&node) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, node);
                true
            }
        }
    }

    /// Position of `node` in the ascending member list.
    pub fn position(&self, node: usize) -> Option<usize> {
        self.0.binary_search(&node).ok()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        self.iter().filter(|&v| other.contains(v)).collect()
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        self.iter().filter(|&v| !other.contains(v)).collect()
    }

    /// Checks every member lies in `1..=n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&v| v == 0 || v > n) {
            Some(&node) => Err(Error::NodeOutOfRange { node, n }),
            None => Ok(()),
        }
    }
}

impl From<Vec<usize>> for NodeSet {
    fn from(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        NodeSet(v)
    }
}

impl From<NodeSet> for Vec<usize> {
    fn from(s: NodeSet) -> Self {
        s.0
    }
}

impl<const N: usize> From<[usize; N]> for NodeSet {
    fn from(a: [usize; N]) -> Self {
        NodeSet::from(a.to_vec())
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        NodeSet::from(iter.into_iter().collect::<Vec<_>>())
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// Wire form of a graph: `{"n": 3, "edges": [[1,2],[2,3]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

/// Immutable undirected simple graph.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphSpec", into = "GraphSpec")]
pub struct Graph {
    // 0-based sorted adjacency lists
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from 1-based edge pairs. Duplicate edges collapse and
    /// self-loops are dropped with a warning: the diagonal of every matrix
    /// in the qualitative class is already free, so a loop carries no
    /// information.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut sets = vec![BTreeSet::new(); n];
        let mut loops = 0usize;
        for (i, j) in edges {
            for node in [i, j] {
                if node == 0 || node > n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if i == j {
                loops += 1;
                continue;
            }
            sets[i - 1].insert(j - 1);
            sets[j - 1].insert(i - 1);
        }
        if loops > 0 {
            log::warn!("stripped {loops} self-loop(s) from graph input");
        }
        let adj: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(Graph { adj, edge_count })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i, i + 1))).expect("valid path")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least 3 nodes");
        Self::new(n, (1..=n).map(|i| (i, i % n + 1))).expect("valid cycle")
    }

    pub fn complete(n: usize) -> Self {
        Self::new(n, (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))))
            .expect("valid complete graph")
    }

    /// Star with centre 1 and leaves `2..=leaves + 1`.
    pub fn star(leaves: usize) -> Self {
        Self::new(leaves + 1, (2..=leaves + 1).map(|j| (1, j))).expect("valid star")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Edges as 1-based pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&&j| j > i).map(move |&j| (i + 1, j + 1)))
            .collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j
            && i >= 1
            && j >= 1
            && i <= self.n()
            && j <= self.n()
            && self.adj[i - 1].binary_search(&(j - 1)).is_ok()
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check_node(i)?;
        Ok(self.adj[i - 1].len())
    }

    pub fn neighbours(&self, i: usize) -> Result<NodeSet> {
        self.check_node(i)?;
        Ok(NodeSet(self.adj[i - 1].iter().map(|&j| j + 1).collect()))
    }

    /// `{i}` together with its neighbours.
    pub fn closed_neighbourhood(&self, i: usize) -> Result<NodeSet> {
        let mut s = self.neighbours(i)?;
        s.insert(i);
        Ok(s)
    }

    pub fn induced_subgraph(&self, s: &NodeSet) -> Result<InducedSubgraph> {
        s.validate(self.n())?;
        let edges = self
            .edges()
            .into_iter()
            .filter_map(|(i, j)| Some((s.position(i)? + 1, s.position(j)? + 1)));
        Ok(InducedSubgraph {
            graph: Graph::new(s.len(), edges)?,
            nodes: s.clone(),
        })
    }

    /// Connected components, each as an ascending node set, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<NodeSet> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for start in 0..self.n() {
            if seen[start] {
                continue;
            }
            let members = self.bfs(start, &mut seen);
            out.push(members.into_iter().map(|v| v + 1).collect());
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    pub fn is_tree(&self) -> bool {
        self.n() > 0 && self.edge_count + 1 == self.n() && self.is_connected()
    }

    /// Hop distances from `source`; unreachable nodes get `None`. Index
    /// `i - 1` holds the distance to node `i`.
    pub fn distances(&self, source: usize) -> Result<Vec<Option<usize>>> {
        self.check_node(source)?;
        let (dist, _) = self.bfs_tree(source - 1);
        Ok(dist)
    }

    pub(crate) fn adj0(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// BFS over 0-based indices; returns distances and parents.
    pub(crate) fn bfs_tree(&self, source: usize) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let mut dist = vec![None; self.n()];
        let mut parent = vec![None; self.n()];
        let mut queue = VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    parent[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
        (dist, parent)
    }

    fn bfs(&self, start: usize, seen: &mut [bool]) -> Vec<usize> {
        let mut members = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    members.push(w);
                }
            }
        }
        members
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n() {
            Err(Error::NodeOutOfRange { node: i, n: self.n() })
        } else {
            Ok(())
        }
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n())
            .field("edges", &self.edges())
            .finish()
    }
}

impl TryFrom<GraphSpec> for Graph {
    type Error = Error;

    fn try_from(spec: GraphSpec) -> Result<Self> {
        Graph::new(spec.n, spec.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

impl From<Graph> for GraphSpec {
    fn from(g: Graph) -> Self {
        GraphSpec {
            n: g.n(),
            edges: g.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }
}

/// A graph induced on a node subset, relabelled to `1..=|nodes|` in
/// ascending order of the parent identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedSubgraph {
    pub graph: Graph,
    /// Parent identifiers; local node `k` is `nodes[k - 1]`.
    pub nodes: NodeSet,
}

impl InducedSubgraph {
    pub fn to_parent(&self, local: usize) -> Option<usize> {
        local.checked_sub(1).and_then(|k| self.nodes.as_slice().get(k).copied())
    }

    pub fn to_local(&self, parent: usize) -> Option<usize> {
        self.nodes.position(parent).map(|k| k + 1)
    }
}

/// The `n × |s|` 0/1 matrix whose `j`-th column is the unit vector of the
/// `j`-th member of `s`.
pub fn selection_matrix(n: usize, s: &NodeSet) -> Result<DMatrix<f64>> {
    s.validate(n)?;
    let mut p = DMatrix::zeros(n, s.len());
    for (j, v) in s.iter().enumerate() {
        p[(v - 1, j)] = 1.0;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbours_of_small_graphs() {
        let p3 = Graph::path(3);
        assert_eq!(p3.neighbours(2).unwrap(), NodeSet::from([1, 3]));
        assert_eq!(p3.neighbours(1).unwrap(), NodeSet::from([2]));
        assert_eq!(Graph::complete(4).neighbours(3).unwrap(), NodeSet::from([1, 2, 4]));
        assert_eq!(p3.closed_neighbourhood(1).unwrap(), NodeSet::from([1, 2]));
        assert!(matches!(
            p3.neighbours(4),
            Err(Error::NodeOutOfRange { node: 4, n: 3 })
        ));
        assert!(p3.neighbours(0).is_err());
    }

    #[test]
    fn induced_subgraphs() {
        let p4 = Graph::path(4);
        let sub = p4.induced_subgraph(&NodeSet::from([1, 2, 4])).unwrap();
        assert_eq!(sub.graph.edges(), vec![(1, 2)]);
        assert_eq!(sub.to_parent(3), Some(4));
        assert_eq!(sub.to_local(4), Some(3));
        assert_eq!(sub.to_local(3), None);

        let c4 = Graph::cycle(4);
        let opp = c4.induced_subgraph(&NodeSet::from([1, 3])).unwrap();
        assert_eq!(opp.graph.n(), 2);
        assert_eq!(opp.graph.edge_count(), 0);

        let whole = c4.induced_subgraph(&NodeSet::full(4)).unwrap();
        assert_eq!(whole.graph, c4);

        assert!(p4.induced_subgraph(&NodeSet::from([5])).is_err());
    }

    #[test]
    fn selection_matrices() {
        let col = selection_matrix(3, &NodeSet::from([2])).unwrap();
        assert_eq!(col, DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]));
        let two = selection_matrix(3, &NodeSet::from([1, 3])).unwrap();
        assert_eq!(
            two,
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
        );
        assert_eq!(
            selection_matrix(2, &NodeSet::full(2)).unwrap(),
            DMatrix::identity(2, 2)
        );
        assert!(selection_matrix(2, &NodeSet::from([3])).is_err());
    }

    #[test]
    fn loops_are_stripped_and_duplicates_collapse() {
        let g = Graph::new(3, [(1, 1), (1, 2), (2, 1), (2, 3)]).unwrap();
        assert_eq!(g.edges(), vec![(1, 2), (2, 3)]);
        assert!(Graph::new(2, [(1, 3)]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g: Graph = serde_json::from_str(r#"{"n": 4, "edges": [[1,2],[3,2],[4,4]]}"#).unwrap();
        assert_eq!(g.edges(), vec![(1, 2), (2, 3)]);
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"{"n":4,"edges":[[1,2],[2,3]]}"#);
        assert!(serde_json::from_str::<Graph>(r#"{"n": 2, "edges": [[1,5]]}"#).is_err());
        let s: NodeSet = serde_json::from_str("[3,1,3]").unwrap();
        assert_eq!(s.as_slice(), &[1, 3]);
    }

    #[test]
    fn components_and_trees() {
        let g = Graph::new(5, [(1, 2), (4, 5)]).unwrap();
        assert_eq!(
            g.components(),
            vec![NodeSet::from([1, 2]), NodeSet::from([3]), NodeSet::from([4, 5])]
        );
        assert!(!g.is_connected());
        assert!(Graph::path(6).is_tree());
        assert!(Graph::star(3).is_tree());
        assert!(!Graph::cycle(4).is_tree());
        assert_eq!(
            Graph::path(4).distances(1).unwrap(),
            vec![Some(0), Some(1), Some(2), Some(3)]
        );
    }
}
