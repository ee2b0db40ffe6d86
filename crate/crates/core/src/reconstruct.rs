//! Constructive recovery of state-matrix entries from Markov parameters.
//!
//! Start from the Markov parameters `(X^k)_{ij}`, `i, j ∈ W`, and replay a
//! forcing chronicle of `W`. For a force `u → v` every node of
//! `V_u = {u} ∪ N(u)` except `v` is already known, so
//!
//! ```text
//! X_uv²        = (X²)_uu − Σ_{z ∈ V_u∖{v}} X_uz X_zu
//! (X^k)_vw     = ((X^{k+1})_uw − Σ_{z ∈ V_u∖{v}} X_uz (X^k)_zw) / X_uv
//! (X^k)_vv     = ((X^{k+2})_uu − Σ_{i,j ∈ V_u, (i,j) ≠ (v,v)} X_ui (X^k)_ij X_ju) / X_uv²
//! ```
//!
//! extends the table of known powers to `v`, at the price of two orders.
//! The positive square root is the right one because edge weights of
//! `Q_p(G)` are positive.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use crate::netsim::MarkovSequence;
use crate::zero_forcing::{derived_set, ForcingChronicle};

/// Relative threshold under which a recovered squared edge weight counts
/// as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Known entries `(X^k)_{ij}` for `i, j` in the current level set and
/// `k = 0..=max_order`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedMarkovTable {
    // insertion order; values are indexed by position here
    nodes: Vec<usize>,
    max_order: usize,
    values: Vec<DMatrix<f64>>,
}

impl ExtendedMarkovTable {
    /// Seeds the table with the `W × W` block of `markov`, `W = V_I ∩ V_O`,
    /// averaging `(i, j)` with `(j, i)`.
    pub fn from_markov(markov: &MarkovSequence, w: &NodeSet) -> Result<Self> {
        if !w.is_subset(&markov.v_in) || !w.is_subset(&markov.v_out) {
            return Err(Error::InvalidInput(format!(
                "seed set {:?} must be both inputs and outputs of the Markov data",
                w.as_slice()
            )));
        }
        markov.check_shape(markov.v_out.len(), markov.v_in.len())?;
        let nodes: Vec<usize> = w.iter().collect();
        let m = nodes.len();
        let values = (0..=markov.order())
            .map(|k| {
                DMatrix::from_fn(m, m, |a, b| {
                    let ab = markov.entry(k, nodes[a], nodes[b]).expect("seed nodes are selected");
                    let ba = markov.entry(k, nodes[b], nodes[a]).expect("seed nodes are selected");
                    0.5 * (ab + ba)
                })
            })
            .collect();
        Ok(ExtendedMarkovTable {
            nodes,
            max_order: markov.order(),
            values,
        })
    }

    pub fn level_set(&self) -> NodeSet {
        self.nodes.iter().copied().collect()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn pos(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|&x| x == node)
    }

    /// `(X^k)_{ij}` if both nodes are in the level set and `k` is in range.
    pub fn get(&self, k: usize, i: usize, j: usize) -> Option<f64> {
        let (a, b) = (self.pos(i)?, self.pos(j)?);
        self.values.get(k).map(|m| m[(a, b)])
    }
}

/// Numerical record of one force.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceDiagnostic {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub weight_squared: f64,
    /// Magnitude of the terms summed to get `X_uv²`, divided by `X_uv²`:
    /// a rough factor by which this force amplifies relative error.
    pub amplification: f64,
    /// Machine epsilon times the product of amplifications so far.
    pub running_error_bound: f64,
}

/// Base Markov order that suffices to replay a chronicle of `L` forces and
/// still read off first and second powers at the end: `2L + 2`.
pub fn required_order(chronicle: &ForcingChronicle) -> usize {
    2 * chronicle.len() + 2
}

/// Applies the force `u → v` to the table.
pub fn force_step(table: &ExtendedMarkovTable, g: &Graph, u: usize, v: usize) -> Result<(ExtendedMarkovTable, ForceDiagnostic)> {
    let Some(pu) = table.pos(u) else {
        return Err(Error::ForcePrecondition(format!("forcing node {u} is not in the level set")));
    };
    if table.pos(v).is_some() {
        return Err(Error::ForcePrecondition(format!("node {v} is already in the level set")));
    }
    if !g.has_edge(u, v) {
        return Err(Error::ForcePrecondition(format!("{u} and {v} are not adjacent")));
    }
    let mut others = vec![pu];
    for z in g.neighbours(u)?.iter().filter(|&z| z != v) {
        match table.pos(z) {
            Some(p) => others.push(p),
            None => {
                return Err(Error::ForcePrecondition(format!(
                    "{u} has a second white neighbour {z} besides {v}"
                )))
            }
        }
    }
    if table.max_order < 3 {
        return Err(Error::InsufficientData {
            available: table.max_order,
            required: 3,
        });
    }

    let t = &table.values;
    let big_k = table.max_order;
    let m = table.nodes.len();
    // X_uz for z in V_u∖{v}, by position
    let x_u = |p: usize| t[1][(pu, p)];

    let known: f64 = others.iter().map(|&p| x_u(p) * t[1][(p, pu)]).sum();
    let magnitude: f64 = t[2][(pu, pu)].abs() + others.iter().map(|&p| (x_u(p) * t[1][(p, pu)]).abs()).sum::<f64>();
    let weight_squared = t[2][(pu, pu)] - known;
    let tol = DEGENERACY_TOL * magnitude.max(f64::MIN_POSITIVE);
    if weight_squared < -tol {
        return Err(Error::InconsistentData(format!(
            "force {u} → {v} yields a negative squared edge weight {weight_squared:e}"
        )));
    }
    if weight_squared <= tol {
        return Err(Error::DegenerateWeight {
            u,
            v,
            value: weight_squared,
        });
    }
    let weight = weight_squared.sqrt();

    let new_k = big_k - 2;
    let mut values: Vec<DMatrix<f64>> = Vec::with_capacity(new_k + 1);
    for k in 0..=new_k {
        let mut next = t[k].clone().resize(m + 1, m + 1, 0.0);
        if k == 0 {
            next[(m, m)] = 1.0;
        } else {
            for w in 0..m {
                let s: f64 = others.iter().map(|&z| x_u(z) * t[k][(z, w)]).sum();
                let val = (t[k + 1][(pu, w)] - s) / weight;
                next[(m, w)] = val;
                next[(w, m)] = val;
            }
        }
        values.push(next);
    }
    // diagonal entries need the cross terms of the same order
    for k in 1..=new_k {
        let cur = &values[k];
        // row u of X restricted to V_u, with v at position m
        let mut row: Vec<(usize, f64)> = others.iter().map(|&p| (p, x_u(p))).collect();
        row.push((m, weight));
        let mut s = 0.0;
        for &(i, xi) in &row {
            for &(j, xj) in &row {
                if i == m && j == m {
                    continue;
                }
                s += xi * cur[(i, j)] * xj;
            }
        }
        let val = (t[k + 2][(pu, pu)] - s) / weight_squared;
        values[k][(m, m)] = val;
    }

    let mut nodes = table.nodes.clone();
    nodes.push(v);
    let amplification = magnitude / weight_squared;
    Ok((
        ExtendedMarkovTable {
            nodes,
            max_order: new_k,
            values,
        },
        ForceDiagnostic {
            u,
            v,
            weight,
            weight_squared,
            amplification,
            running_error_bound: f64::EPSILON * amplification,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    /// Rows and columns of `matrix`, ascending.
    pub nodes: NodeSet,
    /// Principal submatrix of `X` over `nodes`; entries for non-adjacent
    /// pairs are zero and never read from the data.
    pub matrix: DMatrix<f64>,
    /// Markov order left in the final table.
    pub residual_order: usize,
    pub forces: Vec<ForceDiagnostic>,
    /// Largest `|(X)_ij|` the table holds for a non-adjacent pair inside the
    /// target; zero for exact data.
    pub max_non_edge_residual: f64,
}

/// Diagnostics in wire form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionDiagnostics {
    pub nodes: NodeSet,
    pub forces: Vec<ForceDiagnostic>,
    pub residual_order: usize,
    pub max_non_edge_residual: f64,
    pub notes: Vec<String>,
}

impl ReconstructionResult {
    pub fn diagnostics(&self) -> ReconstructionDiagnostics {
        let mut notes = Vec::new();
        if let Some(worst) = self.forces.iter().map(|f| f.running_error_bound).reduce(f64::max) {
            notes.push(format!("heuristic relative error estimate {worst:.3e}"));
        }
        ReconstructionDiagnostics {
            nodes: self.nodes.clone(),
            forces: self.forces.clone(),
            residual_order: self.residual_order,
            max_non_edge_residual: self.max_non_edge_residual,
            notes,
        }
    }
}

/// Recovers the principal submatrix of `X` over `target` using the
/// deterministic chronicle of `V_I ∩ V_O`.
pub fn identify(markov: &MarkovSequence, g: &Graph, target: &NodeSet) -> Result<ReconstructionResult> {
    target.validate(g.n())?;
    let w = markov.v_in.intersection(&markov.v_out);
    let (derived, chronicle) = derived_set(g, &w)?;
    if !target.is_subset(&derived) {
        return Err(Error::UncertifiedTarget {
            outside: target.difference(&derived),
        });
    }
    identify_with_chronicle(markov, g, target, &chronicle)
}

/// As [`identify`], replaying a caller-supplied chronicle. The chronicle is
/// validated against `g` and must start inside `V_I ∩ V_O`.
pub fn identify_with_chronicle(
    markov: &MarkovSequence,
    g: &Graph,
    target: &NodeSet,
    chronicle: &ForcingChronicle,
) -> Result<ReconstructionResult> {
    let n = g.n();
    target.validate(n)?;
    markov.v_in.validate(n)?;
    markov.v_out.validate(n)?;
    let w = markov.v_in.intersection(&markov.v_out);
    if !chronicle.initial.is_subset(&w) {
        return Err(Error::InvalidInput(format!(
            "chronicle starts from {:?}, which is not inside V_I ∩ V_O = {:?}",
            chronicle.initial.as_slice(),
            w.as_slice()
        )));
    }
    let derived = chronicle.replay(g)?;
    let prefix = chronicle.prefix_covering(target).ok_or_else(|| Error::UncertifiedTarget {
        outside: target.difference(&derived),
    })?;
    let required = required_order(&prefix);
    if markov.order() < required {
        return Err(Error::InsufficientData {
            available: markov.order(),
            required,
        });
    }

    let mut table = ExtendedMarkovTable::from_markov(markov, &prefix.initial)?;
    let mut forces = Vec::with_capacity(prefix.len());
    let mut bound = f64::EPSILON;
    for &(u, v) in &prefix.forces {
        let (next, mut diag) = force_step(&table, g, u, v)?;
        bound *= diag.amplification.max(1.0);
        diag.running_error_bound = bound;
        log::debug!("force {u} → {v}: X_uv = {:.6e}, error estimate {:.3e}", diag.weight, bound);
        forces.push(diag);
        table = next;
    }

    let t = target.len();
    let mut matrix = DMatrix::zeros(t, t);
    let mut max_non_edge_residual = 0.0f64;
    for (a, i) in target.iter().enumerate() {
        matrix[(a, a)] = table.get(1, i, i).expect("target is in the level set");
        for (b, j) in target.iter().enumerate().skip(a + 1) {
            let val = 0.5 * (table.get(1, i, j).unwrap() + table.get(1, j, i).unwrap());
            if g.has_edge(i, j) {
                if val <= 0.0 {
                    return Err(Error::InconsistentData(format!(
                        "recovered weight of edge {{{i},{j}}} is {val:e}, not positive"
                    )));
                }
                matrix[(a, b)] = val;
                matrix[(b, a)] = val;
            } else {
                max_non_edge_residual = max_non_edge_residual.max(val.abs());
            }
        }
    }

    Ok(ReconstructionResult {
        nodes: target.clone(),
        matrix,
        residual_order: table.max_order(),
        forces,
        max_non_edge_residual,
    })
}
