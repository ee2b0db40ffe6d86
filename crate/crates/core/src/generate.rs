//! Seeded random graphs for experiments and tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

/// The RNG behind every seeded operation in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph: each pair is an edge with probability `p`.
pub fn random_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.random_bool(p.clamp(0.0, 1.0)) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("generated edges are in range")
}

/// Uniformly relabelled random-attachment tree.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Graph {
    Graph::new(n, tree_edges(n, rng)).expect("generated edges are in range")
}

/// A random tree plus every other pair independently with probability `p`;
/// always connected.
pub fn random_connected_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = tree_edges(n, rng);
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.random_bool(p.clamp(0.0, 1.0)) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("generated edges are in range")
}

fn tree_edges<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut label: Vec<usize> = (1..=n).collect();
    label.shuffle(rng);
    (1..n)
        .map(|k| {
            let parent = rng.random_range(0..k);
            (label[parent], label[k])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trees_and_connected_graphs() {
        let mut rng = seeded_rng(7);
        for n in 1..20 {
            assert!(random_tree(n, &mut rng).is_tree());
            assert!(random_connected_graph(n, 0.2, &mut rng).is_connected());
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = random_graph(12, 0.3, &mut seeded_rng(3));
        let b = random_graph(12, 0.3, &mut seeded_rng(3));
        assert_eq!(a, b);
    }
}
