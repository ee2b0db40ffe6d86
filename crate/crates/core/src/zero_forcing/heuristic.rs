//! Polynomial-time zero forcing sets.
//!
//! Two constructions, both verified before they are returned:
//!
//! * **Diametral path.** Take a shortest path `p_0, ..., p_d` between two
//!   nodes at maximum distance and colour everything except `p_1..=p_d`.
//!   A shortest path has no chords, so `p_0` forces `p_1`, which forces
//!   `p_2`, and so on; the set has `n - diam(G)` nodes.
//! * **Path cover (trees only).** Build a minimum path cover greedily from
//!   the leaves up and colour one end of every path.
//!
//! Disconnected graphs are handled one component at a time.

use crate::error::Result;
use crate::graph::{Graph, NodeSet};

use super::{derived_set, is_zero_forcing_set};

/// Exact all-pairs BFS is used up to this many nodes per component; larger
/// components fall back to a double sweep, which still yields a shortest
/// path and therefore a valid (if possibly larger) set.
const EXACT_DIAMETER_LIMIT: usize = 4096;

pub fn zfs_heuristic(g: &Graph) -> Result<NodeSet> {
    let mut out = NodeSet::new();
    for comp in g.components() {
        let local = if comp.len() == g.n() {
            component_heuristic(g)?
        } else {
            let sub = g.induced_subgraph(&comp)?;
            component_heuristic(&sub.graph)?
                .iter()
                .filter_map(|v| sub.to_parent(v))
                .collect()
        };
        out = out.union(&local);
    }
    debug_assert!(is_zero_forcing_set(g, &out)?);
    Ok(out)
}

fn component_heuristic(g: &Graph) -> Result<NodeSet> {
    if g.n() <= 1 {
        return Ok(NodeSet::full(g.n()));
    }
    let path = diametral_path(g);
    let mut best = repair(g, NodeSet::full(g.n()).difference(&path[1..].iter().copied().collect()))?;
    if g.is_tree() {
        let cover = repair(g, path_cover_starts(g))?;
        if cover.len() <= best.len() {
            best = cover;
        }
    }
    Ok(best)
}

/// Adds the lowest-numbered node outside the derived set until the set
/// forces the whole graph.
fn repair(g: &Graph, mut z: NodeSet) -> Result<NodeSet> {
    loop {
        let (derived, _) = derived_set(g, &z)?;
        match (1..=g.n()).find(|&v| !derived.contains(v)) {
            None => return Ok(z),
            Some(v) => {
                log::debug!("heuristic repair adds node {v}");
                z.insert(v);
            }
        }
    }
}

/// Shortest path (1-based) between the lexicographically first pair of
/// nodes at maximum distance, starting from the smaller endpoint.
fn diametral_path(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let (source, target) = if n <= EXACT_DIAMETER_LIMIT {
        let mut best = (0, 0, 0);
        for s in 0..n {
            let (dist, _) = g.bfs_tree(s);
            for (t, d) in dist.iter().enumerate() {
                if let Some(d) = *d {
                    if d > best.2 {
                        best = (s, t, d);
                    }
                }
            }
        }
        (best.0, best.1)
    } else {
        let far = |s: usize| {
            let (dist, _) = g.bfs_tree(s);
            let mut best = (s, 0);
            for (t, d) in dist.iter().enumerate() {
                if let Some(d) = *d {
                    if d > best.1 {
                        best = (t, d);
                    }
                }
            }
            best.0
        };
        let a = far(0);
        let b = far(a);
        (a.min(b), a.max(b))
    };
    // walk parents back from source to get a path that starts at `source`
    let (_, parent) = g.bfs_tree(target);
    let mut path = vec![source];
    let mut cur = source;
    while let Some(p) = parent[cur] {
        path.push(p);
        cur = p;
    }
    path.into_iter().map(|v| v + 1).collect()
}

/// One endpoint (the smaller id) of every path in a minimum path cover of
/// a tree.
fn path_cover_starts(g: &Graph) -> NodeSet {
    let n = g.n();
    let (_, parent) = g.bfs_tree(0);
    let mut order: Vec<usize> = (0..n).collect();
    let (dist, _) = g.bfs_tree(0);
    order.sort_by_key(|&v| std::cmp::Reverse(dist[v].unwrap_or(0)));

    // a node is open if its path ends at it and may still continue upwards
    let mut open = vec![false; n];
    let mut links: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in &order {
        let open_children: Vec<usize> = g
            .adj0(v)
            .iter()
            .copied()
            .filter(|&c| parent[c] == Some(v) && open[c])
            .collect();
        for &c in open_children.iter().take(2) {
            links[v].push(c);
            links[c].push(v);
        }
        open[v] = open_children.len() < 2;
    }

    let mut seen = vec![false; n];
    let mut starts = Vec::new();
    for v in 0..n {
        if seen[v] || links[v].len() > 1 {
            continue;
        }
        // v is an endpoint of an unvisited path; walk to the other end
        let mut prev = usize::MAX;
        let mut cur = v;
        loop {
            seen[cur] = true;
            match links[cur].iter().find(|&&w| w != prev) {
                Some(&next) => {
                    prev = cur;
                    cur = next;
                }
                None => break,
            }
        }
        starts.push(v.min(cur) + 1);
    }
    starts.into_iter().collect()
}
