//! Networks of identical higher-order nodes.
//!
//! Node `i` has state `x_i ∈ R^q` with `ẋ_i = A x_i + B u_i + E z_i`,
//! coupling `z_i = Σ_j X_ij K x_j` and output `y_i = C x_i`. Stacking the
//! nodes gives the lifted system
//!
//! ```text
//! X_e = I ⊗ A + X ⊗ EK,    M_e = M ⊗ B,    N_e = N ⊗ C.
//! ```
//!
//! Expanding `X_e^k` as a sum over words in `{I ⊗ A, X ⊗ EK}` and using the
//! mixed-product rule, a word with `i` coupling letters contributes
//! `N X^i M ⊗ C w B`. Collecting words by `i`,
//!
//! ```text
//! N_e X_e^k M_e = Σ_{i=0..k} N X^i M ⊗ R_{k,i},   R_{k,k} = C (EK)^k B,
//! ```
//!
//! which is triangular in `k`: as long as `C (EK)^k B ≠ 0` the base
//! Markov parameters can be peeled off one order at a time.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{selection_matrix, Graph, NodeSet};
use crate::netsim::{MarkovSequence, WeightMatrix};
use crate::reconstruct::{identify_with_chronicle, required_order, ReconstructionResult};
use crate::zero_forcing::derived_set;

/// Relative threshold for treating `C (EK)^k B` as zero.
pub const COUPLING_TOL: f64 = 1e-10;

/// Relative tolerance for the block-ratio cross-check in [`deconvolve`].
pub const RATIO_TOL: f64 = 1e-6;

/// Local node matrices. Dimensions: `A: q×q`, `B: q×r`, `C: t×q`,
/// `E: q×s`, `K: s×q`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

impl NodeDynamics {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, e: DMatrix<f64>, k: DMatrix<f64>) -> Result<Self> {
        let d = NodeDynamics { a, b, c, e, k };
        d.validate()?;
        Ok(d)
    }

    /// Single integrators: `A = 0`, `B = C = E = K = 1`.
    pub fn scalar_integrator() -> Self {
        let one = DMatrix::from_element(1, 1, 1.0);
        NodeDynamics {
            a: DMatrix::zeros(1, 1),
            b: one.clone(),
            c: one.clone(),
            e: one.clone(),
            k: one,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.a.nrows();
        let s = self.e.ncols();
        let checks = [
            ("A", self.a.shape(), (q, q)),
            ("B", (self.b.nrows(), 0), (q, 0)),
            ("C", (0, self.c.ncols()), (0, q)),
            ("E", (self.e.nrows(), 0), (q, 0)),
            ("K", self.k.shape(), (s, q)),
        ];
        if q == 0 {
            return Err(Error::DimensionMismatch("node state dimension q must be at least 1".into()));
        }
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has shape {:?} but q = {q}, s = {s} require {:?} (0 = unconstrained)",
                    got, want
                )));
            }
        }
        let all = [&self.a, &self.b, &self.c, &self.e, &self.k];
        if all.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("node dynamics contain non-finite entries".into()));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// `EK`, the `q × q` coupling matrix.
    pub fn coupling(&self) -> DMatrix<f64> {
        &self.e * &self.k
    }
}

#[derive(Serialize, Deserialize)]
struct DynamicsJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "E")]
    e: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    k: Vec<Vec<f64>>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(name: &str, rows: &[Vec<f64>]) -> std::result::Result<DMatrix<f64>, String> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("matrix {name} has ragged rows"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

impl Serialize for NodeDynamics {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DynamicsJson {
            a: to_rows(&self.a),
            b: to_rows(&self.b),
            c: to_rows(&self.c),
            e: to_rows(&self.e),
            k: to_rows(&self.k),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NodeDynamics {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = DynamicsJson::deserialize(d)?;
        let m = |name, rows: &[Vec<f64>]| from_rows(name, rows).map_err(D::Error::custom);
        NodeDynamics::new(m("A", &raw.a)?, m("B", &raw.b)?, m("C", &raw.c)?, m("E", &raw.e)?, m("K", &raw.k)?)
            .map_err(D::Error::custom)
    }
}

/// Outcome of checking `C (EK)^k B ≠ 0` for `k = 0..=horizon`. A clean
/// report says nothing about powers beyond the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub horizon: usize,
    /// Largest `k` such that every power `0..=k` passed.
    pub verified_up_to: Option<usize>,
    pub first_failure: Option<usize>,
    /// `max |C (EK)^k B|` for each checked `k`.
    pub magnitudes: Vec<f64>,
    /// Each magnitude divided by its bound `‖C‖ ‖EK‖^k ‖B‖`.
    pub relative_magnitudes: Vec<f64>,
    pub tolerance: f64,
}

impl CouplingReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Checks `C (EK)^k B` is nonzero for `k = 0..=k_max`, relative to the
/// bound `‖C‖ ‖EK‖^k ‖B‖` (infinity norms) on its entries. The usual
/// horizon is `2q`.
pub fn coupling_condition(dynamics: &NodeDynamics, k_max: usize) -> Result<CouplingReport> {
    coupling_condition_with_tol(dynamics, k_max, COUPLING_TOL)
}

/// As [`coupling_condition`] with a caller-chosen relative threshold.
/// Deconvolution loses roughly a factor `1 / relative magnitude` of
/// accuracy at each order, so a larger threshold screens out dynamics that
/// are identifiable in exact arithmetic but poorly conditioned.
pub fn coupling_condition_with_tol(dynamics: &NodeDynamics, k_max: usize, tol: f64) -> Result<CouplingReport> {
    dynamics.validate()?;
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!("coupling tolerance {tol} must be finite and nonnegative")));
    }
    let f = dynamics.coupling();
    let (nc, nf, nb) = (inf_norm(&dynamics.c), inf_norm(&f), inf_norm(&dynamics.b));
    let mut power_b = dynamics.b.clone();
    let mut magnitudes = Vec::with_capacity(k_max + 1);
    let mut relative_magnitudes = Vec::with_capacity(k_max + 1);
    let mut first_failure = None;
    for k in 0..=k_max {
        if k > 0 {
            power_b = &f * &power_b;
        }
        let mag = (&dynamics.c * &power_b).amax();
        let scale = nc * nf.powi(k as i32) * nb;
        magnitudes.push(mag);
        relative_magnitudes.push(if scale > 0.0 { mag / scale } else { 0.0 });
        if first_failure.is_none() && !(mag > 0.0 && mag > tol * scale) {
            first_failure = Some(k);
        }
    }
    Ok(CouplingReport {
        horizon: k_max,
        verified_up_to: match first_failure {
            Some(0) => None,
            Some(k) => Some(k - 1),
            None => Some(k_max),
        },
        first_failure,
        magnitudes,
        relative_magnitudes,
        tolerance: tol,
    })
}

/// Network state matrix, node dynamics and input/output nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedSystem {
    pub x: WeightMatrix,
    pub dynamics: NodeDynamics,
    pub v_in: NodeSet,
    pub v_out: NodeSet,
}

impl LiftedSystem {
    pub fn new(x: WeightMatrix, dynamics: NodeDynamics, v_in: NodeSet, v_out: NodeSet) -> Result<Self> {
        dynamics.validate()?;
        let n = x.graph().n();
        v_in.validate(n)?;
        v_out.validate(n)?;
        Ok(LiftedSystem { x, dynamics, v_in, v_out })
    }

    /// `I ⊗ A + X ⊗ EK`.
    pub fn state_matrix(&self) -> DMatrix<f64> {
        let n = self.x.graph().n();
        DMatrix::<f64>::identity(n, n).kronecker(&self.dynamics.a) + self.x.entries().kronecker(&self.dynamics.coupling())
    }

    /// `M ⊗ B`.
    pub fn input_matrix(&self) -> DMatrix<f64> {
        let m = selection_matrix(self.x.graph().n(), &self.v_in).expect("validated in constructor");
        m.kronecker(&self.dynamics.b)
    }

    /// `N ⊗ C`.
    pub fn output_matrix(&self) -> DMatrix<f64> {
        let m = selection_matrix(self.x.graph().n(), &self.v_out).expect("validated in constructor");
        m.transpose().kronecker(&self.dynamics.c)
    }
}

/// `N_e X_e^k M_e` for `k = 0..=order`, blocks of size
/// `t|V_O| × r|V_I|`.
pub fn lifted_markov(sys: &LiftedSystem, order: usize) -> MarkovSequence {
    let xe = sys.state_matrix();
    let ne = sys.output_matrix();
    let mut cols = sys.input_matrix();
    let mut data = Vec::with_capacity(order + 1);
    for k in 0..=order {
        if k > 0 {
            cols = &xe * &cols;
        }
        data.push(&ne * &cols);
    }
    MarkovSequence {
        v_in: sys.v_in.clone(),
        v_out: sys.v_out.clone(),
        data,
    }
}

/// `R_{k,i} = C · (sum of length-k words over {A, EK} with i copies of EK) · B`
/// for `0 ≤ i ≤ k ≤ order`, built by extending word prefixes one letter at
/// a time.
pub fn word_tables(dynamics: &NodeDynamics, order: usize) -> Vec<Vec<DMatrix<f64>>> {
    let q = dynamics.state_dim();
    let f = dynamics.coupling();
    // words[i]: sum of words of the current length with i coupling letters
    let mut words = vec![DMatrix::<f64>::identity(q, q)];
    let mut out = Vec::with_capacity(order + 1);
    for k in 0..=order {
        if k > 0 {
            let mut next = Vec::with_capacity(k + 1);
            for i in 0..=k {
                let mut w = DMatrix::zeros(q, q);
                if i < k {
                    w += &words[i] * &dynamics.a;
                }
                if i > 0 {
                    w += &words[i - 1] * &f;
                }
                next.push(w);
            }
            words = next;
        }
        out.push(words.iter().map(|w| &dynamics.c * w * &dynamics.b).collect());
    }
    out
}

/// Recovers the base Markov parameters `N X^k M` from the lifted ones.
pub fn deconvolve(lifted: &MarkovSequence, dynamics: &NodeDynamics) -> Result<MarkovSequence> {
    dynamics.validate()?;
    let (n_in, n_out) = (lifted.v_in.len(), lifted.v_out.len());
    let (r, t) = (dynamics.input_dim(), dynamics.output_dim());
    lifted.check_shape(t * n_out, r * n_in)?;
    let order = lifted.order();
    let report = coupling_condition(dynamics, order)?;
    if let Some(k) = report.first_failure {
        return Err(Error::CouplingBlocked { k });
    }
    let tables = word_tables(dynamics, order);

    let mut base: Vec<DMatrix<f64>> = Vec::with_capacity(order + 1);
    for (k, measured) in lifted.data.iter().enumerate() {
        let mut residual = measured.clone();
        let mut magnitude = measured.amax();
        for (i, prev) in base.iter().enumerate() {
            residual -= prev.kronecker(&tables[k][i]);
            magnitude += prev.amax() * tables[k][i].amax();
        }
        let lead = &tables[k][k];
        // pivot on the largest entry, cross-check up to three runners-up
        let mut ranked: Vec<(usize, usize)> = (0..t).flat_map(|p| (0..r).map(move |s| (p, s))).collect();
        ranked.sort_by(|&x, &y| lead[y].abs().total_cmp(&lead[x].abs()).then(x.cmp(&y)));
        let pivot = ranked[0];
        let checks: Vec<(usize, usize)> = ranked[1..]
            .iter()
            .copied()
            .filter(|&e| lead[e].abs() > COUPLING_TOL * lead[pivot].abs())
            .take(3)
            .collect();
        let tol = RATIO_TOL * magnitude.max(f64::MIN_POSITIVE);
        let mut block = DMatrix::zeros(n_out, n_in);
        for a in 0..n_out {
            for b in 0..n_in {
                let at = |(p, s): (usize, usize)| residual[(a * t + p, b * r + s)];
                let val = at(pivot) / lead[pivot];
                for &e in &checks {
                    let miss = (at(e) - val * lead[e]).abs();
                    if miss > tol {
                        return Err(Error::InconsistentData(format!(
                            "lifted Markov parameter {k}, block ({},{}): entry ratios disagree by {miss:e}",
                            a + 1,
                            b + 1
                        )));
                    }
                }
                block[(a, b)] = val;
            }
        }
        base.push(block);
    }
    Ok(MarkovSequence {
        v_in: lifted.v_in.clone(),
        v_out: lifted.v_out.clone(),
        data: base,
    })
}

/// Deconvolution followed by [`identify`](crate::reconstruct::identify). Only the orders the
/// reconstruction reads are deconvolved, so the coupling condition is
/// needed up to `2L + 2` rather than up to the order of `lifted`.
pub fn recover(lifted: &MarkovSequence, dynamics: &NodeDynamics, g: &Graph, target: &NodeSet) -> Result<ReconstructionResult> {
    target.validate(g.n())?;
    lifted.v_in.validate(g.n())?;
    lifted.v_out.validate(g.n())?;
    let w = lifted.v_in.intersection(&lifted.v_out);
    let (derived, chronicle) = derived_set(g, &w)?;
    let prefix = chronicle.prefix_covering(target).ok_or_else(|| Error::UncertifiedTarget {
        outside: target.difference(&derived),
    })?;
    let needed = required_order(&prefix).min(lifted.order());
    let base = deconvolve(&lifted.truncated(needed), dynamics)?;
    identify_with_chronicle(&base, g, target, &chronicle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{markov_sequence, random_weights, DiagonalMode};

    fn mat(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    fn nilpotent() -> NodeDynamics {
        let i2 = DMatrix::identity(2, 2);
        NodeDynamics::new(DMatrix::zeros(2, 2), i2.clone(), i2.clone(), mat(2, 2, &[0.0, 1.0, 0.0, 0.0]), i2).unwrap()
    }

    #[test]
    fn coupling_examples() {
        let scalar = coupling_condition(&NodeDynamics::scalar_integrator(), 6).unwrap();
        assert!(scalar.passed());
        assert_eq!(scalar.verified_up_to, Some(6));
        assert!(scalar.magnitudes.iter().all(|&m| m == 1.0));

        assert!(scalar.relative_magnitudes.iter().all(|&m| m == 1.0));

        let nil = coupling_condition(&nilpotent(), 4).unwrap();
        assert_eq!(nil.first_failure, Some(2));
        assert_eq!(nil.verified_up_to, Some(1));

        let i2 = DMatrix::identity(2, 2);
        let id = NodeDynamics::new(DMatrix::zeros(2, 2), i2.clone(), i2.clone(), i2.clone(), i2).unwrap();
        assert!(coupling_condition(&id, 4).unwrap().passed());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = NodeDynamics::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        assert!(NodeDynamics::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 2),
        )
        .is_err());
    }

    #[test]
    fn scalar_integrator_lift_is_the_base_system() {
        let g = Graph::path(3);
        let x = random_weights(&g, 5, (0.5, 2.0), DiagonalMode::Free).unwrap();
        let one = NodeSet::from([1]);
        let sys = LiftedSystem::new(x.clone(), NodeDynamics::scalar_integrator(), one.clone(), one.clone()).unwrap();
        let lifted = lifted_markov(&sys, 6);
        let base = markov_sequence(&x, &one, &one, 6).unwrap();
        assert_eq!(lifted, base);
        assert_eq!(deconvolve(&lifted, &NodeDynamics::scalar_integrator()).unwrap(), base);
    }

    #[test]
    fn zeroth_lifted_parameter() {
        let g = Graph::path(2);
        let x = random_weights(&g, 1, (0.5, 2.0), DiagonalMode::Free).unwrap();
        let dynamics = NodeDynamics::new(
            mat(2, 2, &[0.1, 0.2, -0.3, 0.0]),
            mat(2, 1, &[1.0, 2.0]),
            mat(1, 2, &[3.0, -1.0]),
            mat(2, 1, &[1.0, 0.5]),
            mat(1, 2, &[0.2, 1.0]),
        )
        .unwrap();
        let all = NodeSet::full(2);
        let sys = LiftedSystem::new(x, dynamics.clone(), all.clone(), NodeSet::from([2])).unwrap();
        let lifted = lifted_markov(&sys, 0);
        let nm = mat(1, 2, &[0.0, 1.0]);
        assert_eq!(lifted.data[0], nm.kronecker(&(&dynamics.c * &dynamics.b)));
    }

    #[test]
    fn nilpotent_coupling_blocks_at_two() {
        let g = Graph::path(2);
        let x = random_weights(&g, 2, (0.5, 2.0), DiagonalMode::Free).unwrap();
        let one = NodeSet::from([1]);
        let sys = LiftedSystem::new(x, nilpotent(), one.clone(), one).unwrap();
        let lifted = lifted_markov(&sys, 4);
        assert_eq!(deconvolve(&lifted, &nilpotent()).unwrap_err(), Error::CouplingBlocked { k: 2 });
        // order 1 never reaches the vanishing power
        assert!(deconvolve(&lifted.truncated(1), &nilpotent()).is_ok());
    }

    #[test]
    fn non_kronecker_data_is_inconsistent() {
        let i2 = DMatrix::identity(2, 2);
        let id = NodeDynamics::new(DMatrix::zeros(2, 2), i2.clone(), i2.clone(), i2.clone(), i2.clone()).unwrap();
        let one = NodeSet::from([1]);
        let bogus = MarkovSequence {
            v_in: one.clone(),
            v_out: one,
            data: vec![mat(2, 2, &[1.0, 0.0, 0.0, 2.0])],
        };
        assert!(matches!(deconvolve(&bogus, &id), Err(Error::InconsistentData(_))));
    }

    #[test]
    fn dynamics_json() {
        let json = r#"{"A":[[0.0]],"B":[[1.0]],"C":[[1.0]],"E":[[1.0]],"K":[[1.0]]}"#;
        let d: NodeDynamics = serde_json::from_str(json).unwrap();
        assert_eq!(d, NodeDynamics::scalar_integrator());
        assert_eq!(serde_json::to_string(&d).unwrap(), json);
        assert!(serde_json::from_str::<NodeDynamics>(r#"{"A":[[0.0]],"B":[[1.0],[1.0]],"C":[[1.0]],"E":[[1.0]],"K":[[1.0]]}"#).is_err());
    }
}
