//! Exact minimum zero forcing sets by exhaustive search over subsets in
//! increasing size, each size scanned in lexicographic order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};

pub const DEFAULT_SEARCH_CAP: usize = 25;

/// Closure of `black` under the color-change rule on bitmask rows.
pub(crate) fn closure(rows: &[u64], full: u64, mut black: u64) -> u64 {
    loop {
        let mut changed = false;
        let mut pending = black;
        while pending != 0 {
            let u = pending.trailing_zeros() as usize;
            pending &= pending - 1;
            let white = rows[u] & !black;
            if white.count_ones() == 1 {
                black |= white;
                changed = true;
            }
        }
        if !changed || black == full {
            return black;
        }
    }
}

struct Search {
    rows: Vec<u64>,
    full: u64,
    // nodes with no neighbour must start black
    forced: u64,
    // free nodes in ascending order
    free: Vec<usize>,
}

impl Search {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let rows: Vec<u64> = (0..n)
            .map(|u| g.adj0(u).iter().fold(0u64, |m, &w| m | (1 << w)))
            .collect();
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let forced = (0..n).filter(|&u| rows[u] == 0).fold(0, |m, u| m | (1 << u));
        let free = (0..n).filter(|&u| forced & (1 << u) == 0).collect();
        Search {
            rows,
            full,
            forced,
            free,
        }
    }

    /// Lexicographically first set of `k` free nodes, starting with
    /// `free[first]`, that together with the forced nodes is a ZFS.
    fn first_from(&self, first: usize, k: usize) -> Option<u64> {
        let mut picks = Vec::with_capacity(k);
        picks.push(first);
        self.extend(&mut picks, self.forced | (1 << self.free[first]), k)
    }

    fn extend(&self, picks: &mut Vec<usize>, set: u64, k: usize) -> Option<u64> {
        if picks.len() == k {
            return (closure(&self.rows, self.full, set) == self.full).then_some(set);
        }
        let next = picks.last().map_or(0, |&p| p + 1);
        let remaining = k - picks.len();
        for idx in next..=self.free.len() - remaining {
            picks.push(idx);
            let found = self.extend(picks, set | (1 << self.free[idx]), k);
            picks.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

/// Valid lower bound: every component needs a black node, and the first
/// force from a node of degree `d` needs `d` black nodes in its closed
/// neighbourhood, so each component needs at least `max(1, min degree)`.
fn lower_bound(g: &Graph) -> usize {
    g.components()
        .iter()
        .map(|c| {
            let min_deg = c.iter().map(|v| g.adj0(v - 1).len()).min().unwrap_or(0);
            min_deg.max(1)
        })
        .sum()
}

/// A minimum zero forcing set; ties are broken towards the lexicographically
/// smallest member list. Refuses graphs with more than `cap` nodes.
pub fn minimum_zero_forcing_set(g: &Graph, cap: usize) -> Result<NodeSet> {
    let n = g.n();
    if n > cap.min(64) {
        return Err(Error::SearchCapExceeded { n, cap: cap.min(64) });
    }
    if n == 0 {
        return Ok(NodeSet::new());
    }
    let search = Search::new(g);
    let base = search.forced.count_ones() as usize;
    if closure(&search.rows, search.full, search.forced) == search.full {
        return Ok(to_node_set(search.forced));
    }
    let start = lower_bound(g).max(base + 1) - base;
    for k in start..=search.free.len() {
        let hit = (0..=search.free.len() - k)
            .into_par_iter()
            .find_map_first(|first| search.first_from(first, k));
        if let Some(set) = hit {
            return Ok(to_node_set(set));
        }
    }
    unreachable!("the full node set is always zero forcing")
}

fn to_node_set(mask: u64) -> NodeSet {
    (0..64).filter(|&u| mask & (1 << u) != 0).map(|u| u + 1).collect()
}
