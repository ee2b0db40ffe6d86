mod common;

use common::{matrix_power, random_subset, weighted_graph};
use nalgebra::{Complex, DMatrix};
use netident::generate::{random_connected_graph, seeded_rng};
use netident::netsim::{
    check_class, markov_parameters, markov_sequence, random_directed_weights, random_weights, scaling_counterexample,
    transfer_eval, Counterexample, CounterexampleClass, DiagonalMode, MarkovSequence, SignClass,
};
use netident::{Error, Graph, NodeSet};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #[test]
    fn markov_parameters_are_selected_matrix_powers(seed: u64) {
        let mut rng = seeded_rng(seed);
        let (g, x) = weighted_graph(9, &mut rng);
        let n = g.n();
        let v_in = random_subset(n, rng.random_range(1..=n), &mut rng);
        let v_out = random_subset(n, rng.random_range(1..=n), &mut rng);
        let m = markov_sequence(&x, &v_in, &v_out, 2 * n).unwrap();
        prop_assert_eq!(m.order(), 2 * n);
        for k in 0..=2 * n {
            let p = matrix_power(x.entries(), k);
            for i in v_out.iter() {
                for j in v_in.iter() {
                    let got = m.entry(k, i, j).unwrap();
                    let want = p[(i - 1, j - 1)];
                    prop_assert!((got - want).abs() <= 1e-10 * p.amax().max(1.0));
                }
            }
        }
    }

    #[test]
    fn square_blocks_are_symmetric(seed: u64) {
        let mut rng = seeded_rng(seed);
        let (g, x) = weighted_graph(9, &mut rng);
        let w = random_subset(g.n(), rng.random_range(1..=g.n()), &mut rng);
        let m = markov_sequence(&x, &w, &w, 2 * g.n()).unwrap();
        for block in &m.data {
            prop_assert!((block - block.transpose()).amax() <= 1e-12 * block.amax().max(1.0));
        }
    }

    #[test]
    fn transfer_matrix_matches_neumann_series(seed: u64) {
        let mut rng = seeded_rng(seed);
        let (g, x) = weighted_graph(8, &mut rng);
        let n = g.n();
        let v_in = random_subset(n, rng.random_range(1..=n), &mut rng);
        let v_out = random_subset(n, rng.random_range(1..=n), &mut rng);
        let norm = x.entries().norm();
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let s = Complex::from_polar(100.0 * norm, angle);
        // Σ_k N X^k M / s^(k+1); terms shrink by 1/100 at least
        let m = markov_sequence(&x, &v_in, &v_out, 12).unwrap();
        let mut series = DMatrix::<Complex<f64>>::zeros(v_out.len(), v_in.len());
        let mut scale = s.inv();
        for block in &m.data {
            series += block.map(|v| Complex::new(v, 0.0) * scale);
            scale /= s;
        }
        let exact = transfer_eval(x.entries(), &v_in, &v_out, s).unwrap();
        let diff = (exact - &series).map(|z| z.norm()).max();
        prop_assert!(diff <= 1e-8 * series.map(|z| z.norm()).max().max(1e-300) + 1e-300, "diff {diff}");
    }

    #[test]
    fn directed_counterexamples_share_markov_parameters(seed: u64) {
        let mut rng = seeded_rng(seed);
        let n = rng.random_range(2..=8);
        let x = random_directed_weights(n, 0.5, (0.5, 2.0), &mut rng).unwrap();
        let hidden = rng.random_range(1..n);
        let visible = random_subset(n, n - hidden, &mut rng);
        let v_in = random_subset(n, rng.random_range(0..=visible.len()), &mut rng).intersection(&visible);
        let v_out = visible.difference(&v_in).union(&random_subset(n, 2, &mut rng).intersection(&visible));
        let ce = scaling_counterexample(x.entries(), &v_in, &v_out, CounterexampleClass::Directed, 2.0).unwrap();
        prop_assert!((ce.matrix() - x.entries()).amax() >= 0.1);
        prop_assert!(ce.matrix().iter().enumerate().all(|(idx, &v)| idx % (n + 1) == 0 || v >= 0.0));
        let a = markov_parameters(x.entries(), &v_in, &v_out, 2 * n).unwrap();
        let b = markov_parameters(ce.matrix(), &v_in, &v_out, 2 * n).unwrap();
        prop_assert!(a.max_scaled_difference(&b).unwrap() <= 1e-10);
    }

    #[test]
    fn sign_free_counterexamples_stay_symmetric(seed: u64) {
        let mut rng = seeded_rng(seed);
        let (g, x) = weighted_graph(8, &mut rng);
        let n = g.n();
        let v = random_subset(n, rng.random_range(1..n), &mut rng);
        let ce = scaling_counterexample(x.entries(), &v, &v, CounterexampleClass::SignFree, -1.0).unwrap();
        check_class(&g, ce.matrix(), SignClass::SignFree).unwrap();
        let a = markov_sequence(&x, &v, &v, 2 * n).unwrap();
        let b = markov_parameters(ce.matrix(), &v, &v, 2 * n).unwrap();
        prop_assert!(a.max_scaled_difference(&b).unwrap() <= 1e-10);
    }
}

#[test]
fn random_weights_are_seeded_and_in_class() {
    let mut rng = seeded_rng(2);
    for _ in 0..30 {
        let g = random_connected_graph(rng.random_range(1..12), 0.3, &mut rng);
        let seed = rng.random();
        let a = random_weights(&g, seed, (0.5, 2.0), DiagonalMode::Free).unwrap();
        assert_eq!(a, random_weights(&g, seed, (0.5, 2.0), DiagonalMode::Free).unwrap());
        check_class(&g, a.entries(), SignClass::Positive).unwrap();
        for (i, j) in g.edges() {
            assert!((0.5..=2.0).contains(&a.entries()[(i - 1, j - 1)]));
        }
        let l = random_weights(&g, seed, (0.5, 2.0), DiagonalMode::Laplacian).unwrap();
        for row in l.entries().row_iter() {
            assert!(row.sum().abs() < 1e-12);
        }
    }
}

#[test]
fn markov_json_round_trip_and_validation() {
    let g = Graph::cycle(4);
    let x = random_weights(&g, 1, (0.5, 2.0), DiagonalMode::Free).unwrap();
    let m = markov_sequence(&x, &NodeSet::from([1, 2]), &NodeSet::from([2]), 5).unwrap();
    let text = serde_json::to_string(&m).unwrap();
    let back: MarkovSequence = serde_json::from_str(&text).unwrap();
    assert_eq!(back, m);
    assert!(serde_json::from_str::<MarkovSequence>(r#"{"v_in":[1],"v_out":[1],"K":2,"data":[[[1]]]}"#).is_err());
}

#[test]
fn hidden_block_without_cross_edges_is_shifted() {
    // node 3 is isolated from the visible pair
    let x = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 4.0]);
    let v = NodeSet::from([1, 2]);
    let ce = scaling_counterexample(&x, &v, &v, CounterexampleClass::Directed, 2.0).unwrap();
    assert!(matches!(ce, Counterexample::HiddenBlockIndependent { .. }));
    assert_eq!(ce.matrix()[(2, 2)], 5.0);
}

#[test]
fn counterexample_needs_a_hidden_node() {
    let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
    let e = scaling_counterexample(&x, &NodeSet::from([1]), &NodeSet::from([2]), CounterexampleClass::Directed, 2.0);
    assert_eq!(e.unwrap_err(), Error::NoHiddenNode);
}
