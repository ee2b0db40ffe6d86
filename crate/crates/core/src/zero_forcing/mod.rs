//! The color-change rule and everything built on it.
//!
//! A black node with exactly one white neighbour forces that neighbour
//! black. [`derived_set`] applies the rule to a fixpoint and records one
//! concrete order of forces as a [`ForcingChronicle`]; the fixpoint itself
//! does not depend on the order.

mod exact;
mod heuristic;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};

pub use exact::{minimum_zero_forcing_set, DEFAULT_SEARCH_CAP};
pub use heuristic::zfs_heuristic;

/// A black/white colouring of a graph that forces can be applied to one at
/// a time.
#[derive(Clone, Debug)]
pub struct Coloring<'g> {
    graph: &'g Graph,
    black: Vec<bool>,
    white_count: Vec<usize>,
}

impl<'g> Coloring<'g> {
    pub fn new(graph: &'g Graph, black: &NodeSet) -> Result<Self> {
        black.validate(graph.n())?;
        let mut is_black = vec![false; graph.n()];
        for v in black.iter() {
            is_black[v - 1] = true;
        }
        let white_count = (0..graph.n())
            .map(|u| graph.adj0(u).iter().filter(|&&w| !is_black[w]).count())
            .collect();
        Ok(Coloring {
            graph,
            black: is_black,
            white_count,
        })
    }

    pub fn is_black(&self, v: usize) -> bool {
        v >= 1 && v <= self.black.len() && self.black[v - 1]
    }

    pub fn black(&self) -> NodeSet {
        (1..=self.black.len()).filter(|&v| self.black[v - 1]).collect()
    }

    pub fn black_count(&self) -> usize {
        self.black.iter().filter(|&&b| b).count()
    }

    /// The unique white neighbour of `u` if `u` is black and has exactly
    /// one, i.e. the node `u` may force.
    pub fn forcing_target(&self, u: usize) -> Option<usize> {
        if !self.is_black(u) || self.white_count[u - 1] != 1 {
            return None;
        }
        self.graph
            .adj0(u - 1)
            .iter()
            .find(|&&w| !self.black[w])
            .map(|&w| w + 1)
    }

    /// Applies `u → v`, checking the color-change rule allows it.
    pub fn apply_force(&mut self, u: usize, v: usize) -> Result<()> {
        match self.forcing_target(u) {
            Some(t) if t == v => {
                self.blacken(v - 1);
                Ok(())
            }
            _ => Err(Error::ForcePrecondition(format!(
                "{u} → {v} is not a legal force: {u} must be black with {v} as its only white neighbour"
            ))),
        }
    }

    fn blacken(&mut self, v: usize) {
        self.black[v] = true;
        for &w in self.graph.adj0(v) {
            self.white_count[w] -= 1;
        }
    }

    /// Runs the rule to a fixpoint, always applying the force with the
    /// smallest forcing node. Returns the forces in order.
    fn run_to_fixpoint(&mut self, record: bool) -> Vec<(usize, usize)> {
        let mut forces = Vec::new();
        let mut heap: BinaryHeap<Reverse<usize>> = (0..self.black.len())
            .filter(|&u| self.black[u] && self.white_count[u] == 1)
            .map(Reverse)
            .collect();
        while let Some(Reverse(u)) = heap.pop() {
            if self.white_count[u] != 1 {
                continue;
            }
            let v = *self
                .graph
                .adj0(u)
                .iter()
                .find(|&&w| !self.black[w])
                .expect("white count says one white neighbour exists");
            self.blacken(v);
            if record {
                forces.push((u + 1, v + 1));
            }
            for &w in self.graph.adj0(v) {
                if self.black[w] && self.white_count[w] == 1 {
                    heap.push(Reverse(w));
                }
            }
            if self.white_count[v] == 1 {
                heap.push(Reverse(v));
            }
        }
        forces
    }
}

/// Initial black set plus the ordered forces that grew it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForcingChronicle {
    pub initial: NodeSet,
    pub forces: Vec<(usize, usize)>,
}

impl ForcingChronicle {
    pub fn len(&self) -> usize {
        self.forces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forces.is_empty()
    }

    /// Initial set together with every forced node.
    pub fn derived(&self) -> NodeSet {
        self.initial
            .iter()
            .chain(self.forces.iter().map(|&(_, v)| v))
            .collect()
    }

    /// Replays the chronicle on `g`, checking every step is a legal force.
    /// Returns the final black set.
    pub fn replay(&self, g: &Graph) -> Result<NodeSet> {
        let mut coloring = Coloring::new(g, &self.initial)?;
        for &(u, v) in &self.forces {
            if u == 0 || u > g.n() || v == 0 || v > g.n() {
                return Err(Error::NodeOutOfRange {
                    node: u.max(v),
                    n: g.n(),
                });
            }
            coloring.apply_force(u, v)?;
        }
        Ok(coloring.black())
    }

    /// The shortest prefix after which every node of `target` is black, or
    /// `None` if the whole chronicle does not reach `target`.
    pub fn prefix_covering(&self, target: &NodeSet) -> Option<ForcingChronicle> {
        let mut covered: Vec<usize> = target.iter().filter(|&v| !self.initial.contains(v)).collect();
        if covered.is_empty() {
            return Some(ForcingChronicle {
                initial: self.initial.clone(),
                forces: Vec::new(),
            });
        }
        for (t, &(_, v)) in self.forces.iter().enumerate() {
            covered.retain(|&x| x != v);
            if covered.is_empty() {
                return Some(ForcingChronicle {
                    initial: self.initial.clone(),
                    forces: self.forces[..=t].to_vec(),
                });
            }
        }
        None
    }
}

/// Chronicle wire form: `{"initial":[...],"forces":[[u,v],...],"derived":[...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChronicleJson {
    pub initial: NodeSet,
    pub forces: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<NodeSet>,
}

impl From<&ForcingChronicle> for ChronicleJson {
    fn from(c: &ForcingChronicle) -> Self {
        ChronicleJson {
            initial: c.initial.clone(),
            forces: c.forces.iter().map(|&(u, v)| [u, v]).collect(),
            derived: Some(c.derived()),
        }
    }
}

impl From<ChronicleJson> for ForcingChronicle {
    fn from(c: ChronicleJson) -> Self {
        ForcingChronicle {
            initial: c.initial,
            forces: c.forces.into_iter().map(|[u, v]| (u, v)).collect(),
        }
    }
}

impl Serialize for ForcingChronicle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChronicleJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ForcingChronicle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ChronicleJson::deserialize(d).map(Into::into)
    }
}

/// The derived set of `z` with the deterministic chronicle that reaches it.
pub fn derived_set(g: &Graph, z: &NodeSet) -> Result<(NodeSet, ForcingChronicle)> {
    let mut coloring = Coloring::new(g, z)?;
    let forces = coloring.run_to_fixpoint(true);
    Ok((
        coloring.black(),
        ForcingChronicle {
            initial: z.clone(),
            forces,
        },
    ))
}

pub fn is_zero_forcing_set(g: &Graph, z: &NodeSet) -> Result<bool> {
    let mut coloring = Coloring::new(g, z)?;
    coloring.run_to_fixpoint(false);
    Ok(coloring.black_count() == g.n())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_endpoint_forces_down_the_path() {
        let (d, c) = derived_set(&Graph::path(4), &NodeSet::from([1])).unwrap();
        assert_eq!(d, NodeSet::full(4));
        assert_eq!(c.forces, vec![(1, 2), (2, 3), (3, 4)]);
        assert_eq!(c.derived(), d);
    }

    #[test]
    fn stuck_colourings() {
        let (d, c) = derived_set(&Graph::complete(3), &NodeSet::from([1])).unwrap();
        assert_eq!(d, NodeSet::from([1]));
        assert!(c.is_empty());
        let (d, _) = derived_set(&Graph::path(3), &NodeSet::from([2])).unwrap();
        assert_eq!(d, NodeSet::from([2]));
    }

    #[test]
    fn zero_forcing_checks() {
        let p3 = Graph::path(3);
        assert!(!is_zero_forcing_set(&p3, &NodeSet::from([2])).unwrap());
        assert!(is_zero_forcing_set(&p3, &NodeSet::from([1])).unwrap());
        let k4 = Graph::complete(4);
        assert!(is_zero_forcing_set(&k4, &NodeSet::from([1, 2, 3])).unwrap());
        assert!(!is_zero_forcing_set(&k4, &NodeSet::from([1, 2])).unwrap());
        assert!(is_zero_forcing_set(&Graph::empty(0), &NodeSet::new()).unwrap());
        assert!(is_zero_forcing_set(&p3, &NodeSet::from([4])).is_err());
    }

    #[test]
    fn smallest_forcing_node_goes_first() {
        // star centre 1 with leaves 2,3 plus pendant 4 on 3; black {2,3}
        let g = Graph::new(4, [(1, 2), (1, 3), (3, 4)]).unwrap();
        let (_, c) = derived_set(&g, &NodeSet::from([2, 3])).unwrap();
        assert_eq!(c.forces, vec![(2, 1), (3, 4)]);
    }

    #[test]
    fn replay_rejects_illegal_forces() {
        let g = Graph::path(3);
        let bad = ForcingChronicle {
            initial: NodeSet::from([2]),
            forces: vec![(2, 1)],
        };
        assert!(matches!(bad.replay(&g), Err(Error::ForcePrecondition(_))));
        let good = ForcingChronicle {
            initial: NodeSet::from([1, 2]),
            forces: vec![(2, 3)],
        };
        assert_eq!(good.replay(&g).unwrap(), NodeSet::full(3));
    }

    #[test]
    fn chronicle_json_shape() {
        let (_, c) = derived_set(&Graph::path(3), &NodeSet::from([1])).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"initial":[1],"forces":[[1,2],[2,3]],"derived":[1,2,3]}"#);
        let back: ForcingChronicle = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn prefix_covering_stops_early() {
        let (_, c) = derived_set(&Graph::path(5), &NodeSet::from([1])).unwrap();
        assert_eq!(c.prefix_covering(&NodeSet::from([1])).unwrap().len(), 0);
        assert_eq!(c.prefix_covering(&NodeSet::from([3])).unwrap().len(), 2);
        let (_, stuck) = derived_set(&Graph::path(3), &NodeSet::from([2])).unwrap();
        assert!(stuck.prefix_covering(&NodeSet::from([1])).is_none());
    }
}
