//! Independent oracles and instance generators shared by the integration
//! tests. Nothing here calls the forcing or reconstruction code under test.

#![allow(dead_code)]

use nalgebra::DMatrix;
use netident::generate::random_connected_graph;
use netident::higher_order::{coupling_condition_with_tol, NodeDynamics};
use netident::netsim::{random_weights_with, DiagonalMode, WeightMatrix};
use netident::{Graph, NodeSet};
use rand::seq::SliceRandom;
use rand::Rng;

/// Applies legal forces in a random order until none is left.
pub fn naive_derived<R: Rng + ?Sized>(g: &Graph, z: &NodeSet, rng: &mut R) -> NodeSet {
    let n = g.n();
    let mut black = vec![false; n + 1];
    for v in z.iter() {
        black[v] = true;
    }
    let mut order: Vec<usize> = (1..=n).collect();
    loop {
        order.shuffle(rng);
        let mut changed = false;
        for &u in &order {
            if !black[u] {
                continue;
            }
            let white: Vec<usize> = (1..=n).filter(|&v| v != u && g.has_edge(u, v) && !black[v]).collect();
            if white.len() == 1 {
                black[white[0]] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (1..=n).filter(|&v| black[v]).collect()
}

/// Closure by sweeping nodes in index order until nothing changes.
pub fn sweep_derived(g: &Graph, z: &NodeSet) -> NodeSet {
    let n = g.n();
    let mut black = vec![false; n + 1];
    for v in z.iter() {
        black[v] = true;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for u in 1..=n {
            if !black[u] {
                continue;
            }
            let white: Vec<usize> = (1..=n).filter(|&v| v != u && g.has_edge(u, v) && !black[v]).collect();
            if white.len() == 1 {
                black[white[0]] = true;
                changed = true;
            }
        }
    }
    (1..=n).filter(|&v| black[v]).collect()
}

/// First set, by size and then lexicographically, whose sweep closure is
/// every node.
pub fn brute_min_zfs(g: &Graph) -> NodeSet {
    let n = g.n();
    for k in 0..=n {
        let mut combo: Vec<usize> = (1..=k).collect();
        loop {
            let z = NodeSet::from(combo.clone());
            if sweep_derived(g, &z).len() == n {
                return z;
            }
            // next k-combination of 1..=n in lexicographic order
            let mut i = k;
            while i > 0 && combo[i - 1] == n - k + i {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    unreachable!("V forces itself")
}

pub fn matrix_power(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut p = DMatrix::identity(x.nrows(), x.ncols());
    for _ in 0..k {
        p = &p * x;
    }
    p
}

/// Largest entrywise error divided by the largest entry of `truth`.
pub fn rel_err(got: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (got - truth).amax() / truth.amax().max(f64::MIN_POSITIVE)
}

pub fn principal(x: &DMatrix<f64>, s: &NodeSet) -> DMatrix<f64> {
    let idx: Vec<usize> = s.iter().map(|v| v - 1).collect();
    x.select_rows(&idx).select_columns(&idx)
}

pub fn random_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> NodeSet {
    let mut all: Vec<usize> = (1..=n).collect();
    all.shuffle(rng);
    all.truncate(k);
    NodeSet::from(all)
}

/// Connected graph on `2..=n_max` nodes with a `Q_p` weight matrix,
/// edge weights in `[0.5, 2]`.
pub fn weighted_graph<R: Rng + ?Sized>(n_max: usize, rng: &mut R) -> (Graph, WeightMatrix) {
    let n = rng.random_range(2..=n_max);
    let p = rng.random_range(0.0..0.5);
    let g = random_connected_graph(n, p, rng);
    let x = random_weights_with(&g, rng, (0.5, 2.0), DiagonalMode::Free).unwrap();
    (g, x)
}

fn signed<R: Rng + ?Sized>(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let v: f64 = rng.random_range(lo..hi);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    })
}

/// Random node dynamics of state dimension `q` whose coupling powers
/// `C (EK)^k B`, `k ≤ horizon`, are each at least `1e-3` of their norm
/// bound. Entries of B, C, E, K have magnitude in `[0.5, 1]`, those of A in
/// `[0, 0.3]`.
pub fn conditioned_dynamics<R: Rng + ?Sized>(q: usize, horizon: usize, rng: &mut R) -> NodeDynamics {
    let (r, t, s) = (rng.random_range(1..=q), rng.random_range(1..=q), rng.random_range(1..=q));
    loop {
        let d = NodeDynamics::new(
            signed(q, q, 0.0, 0.3, rng),
            signed(q, r, 0.5, 1.0, rng),
            signed(t, q, 0.5, 1.0, rng),
            signed(q, s, 0.5, 1.0, rng),
            signed(s, q, 0.5, 1.0, rng),
        )
        .unwrap();
        if coupling_condition_with_tol(&d, horizon, 1e-3).unwrap().passed() {
            return d;
        }
    }
}

/// Dynamics with `C (EK)^k B = J^k` for the `q × q` upper shift `J`, hidden
/// behind a random change of basis `T`: `B = T`, `C = T^{-1}`,
/// `EK = T J T^{-1}`. The coupling powers vanish first at `k = q`.
pub fn nilpotent_dynamics<R: Rng + ?Sized>(q: usize, rng: &mut R) -> NodeDynamics {
    let t = loop {
        let t = DMatrix::<f64>::identity(q, q) * 2.0 + signed(q, q, 0.0, 0.5, rng);
        if t.clone().try_inverse().is_some() {
            break t;
        }
    };
    let t_inv = t.clone().try_inverse().unwrap();
    let j = DMatrix::from_fn(q, q, |i, k| if k == i + 1 { 1.0 } else { 0.0 });
    let f = &t * j * &t_inv;
    NodeDynamics::new(signed(q, q, 0.0, 0.3, rng), t, t_inv, f, DMatrix::identity(q, q)).unwrap()
}
