//! Graph-theoretic identifiability certificates.
//!
//! With `W = V_I ∩ V_O`, the principal submatrix of the state matrix over
//! the derived set `D(W)` is determined by the Markov parameters, for every
//! member of the sign-constrained class. When `W` is a zero forcing set the
//! whole state matrix is. The test is sufficient only: a report that does
//! not certify a node says nothing about whether that node's weights are
//! identifiable by other means.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{Graph, NodeSet};
use crate::zero_forcing::{derived_set, ForcingChronicle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// `D(W) = V`.
    CertifiedFull,
    /// `D(W)` is a proper nonempty subset of `V`.
    CertifiedPartial,
    /// `D(W)` is empty.
    Uncertified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub verdict: Verdict,
    #[serde(rename = "W")]
    pub w: NodeSet,
    pub derived: NodeSet,
    pub chronicle: ForcingChronicle,
    pub certified_full: bool,
    pub certified_nodes: NodeSet,
    pub notes: Vec<String>,
}

const SUFFICIENCY_NOTE: &str = "the zero forcing condition is sufficient, not necessary: \
     nodes outside the certified set are uncertified, not shown to be unidentifiable";

pub fn certify(g: &Graph, v_in: &NodeSet, v_out: &NodeSet) -> Result<IdentifiabilityReport> {
    v_in.validate(g.n())?;
    v_out.validate(g.n())?;
    let w = v_in.intersection(v_out);
    let (derived, chronicle) = derived_set(g, &w)?;
    let certified_full = derived.len() == g.n();
    let verdict = if certified_full {
        Verdict::CertifiedFull
    } else if derived.is_empty() {
        Verdict::Uncertified
    } else {
        Verdict::CertifiedPartial
    };

    let mut notes = Vec::new();
    let inputs_only = v_in.difference(v_out);
    let outputs_only = v_out.difference(v_in);
    if !inputs_only.is_empty() {
        notes.push(format!(
            "input-only nodes {:?} do not take part in forcing",
            inputs_only.as_slice()
        ));
    }
    if !outputs_only.is_empty() {
        notes.push(format!(
            "output-only nodes {:?} do not take part in forcing",
            outputs_only.as_slice()
        ));
    }
    if !certified_full {
        notes.push(SUFFICIENCY_NOTE.to_string());
        let untouched = NodeSet::full(g.n()).difference(&v_in.union(v_out));
        if !untouched.is_empty() {
            notes.push(format!(
                "nodes {:?} are neither inputs nor outputs; without the symmetry and sign constraints \
                 (directed or sign-free classes) the system would be unidentifiable",
                untouched.as_slice()
            ));
        }
    }

    Ok(IdentifiabilityReport {
        verdict,
        w,
        certified_nodes: derived.clone(),
        derived,
        chronicle,
        certified_full,
        notes,
    })
}

/// Whether the subgraph induced on `s` is certified identifiable, that is
/// `s ⊆ D(V_I ∩ V_O)`.
pub fn certify_subgraph(g: &Graph, s: &NodeSet, v_in: &NodeSet, v_out: &NodeSet) -> Result<bool> {
    s.validate(g.n())?;
    let report = certify(g, v_in, v_out)?;
    Ok(s.is_subset(&report.derived))
}

/// `V_I ∪ V_O = V`: necessary for identifiability once either the symmetry
/// or the sign constraint is dropped. A `false` result comes with an
/// explicit indistinguishable pair from
/// [`scaling_counterexample`](crate::netsim::scaling_counterexample).
pub fn necessity_check_directed(g: &Graph, v_in: &NodeSet, v_out: &NodeSet) -> Result<bool> {
    let n = g.n();
    v_in.validate(n)?;
    v_out.validate(n)?;
    Ok(v_in.union(v_out).len() == n)
}
