//! State matrices of networked single-integrator systems `ẋ = Xx + Mu`,
//! `y = Nx`, their Markov parameters `N X^k M`, and the transfer matrix
//! `N (sI - X)^{-1} M`.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::seeded_rng;
use crate::graph::{selection_matrix, Graph, NodeSet};

pub const DEFAULT_WEIGHT_RANGE: (f64, f64) = (0.5, 2.0);

/// Sign constraint imposed on the off-diagonal entries of a symmetric
/// state matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignClass {
    /// `Q_p(G)`: edge entries strictly positive.
    Positive,
    /// `Q(G)`: edge entries nonzero, any sign.
    SignFree,
}

/// Symmetric matrix whose off-diagonal nonzero pattern is the edge set of
/// its graph. The diagonal is free.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    graph: Graph,
    entries: DMatrix<f64>,
    class: SignClass,
}

impl WeightMatrix {
    /// A member of `Q_p(G)`.
    pub fn new(graph: Graph, entries: DMatrix<f64>) -> Result<Self> {
        check_class(&graph, &entries, SignClass::Positive)?;
        Ok(WeightMatrix {
            graph,
            entries,
            class: SignClass::Positive,
        })
    }

    /// A member of `Q(G)`.
    pub fn sign_free(graph: Graph, entries: DMatrix<f64>) -> Result<Self> {
        check_class(&graph, &entries, SignClass::SignFree)?;
        Ok(WeightMatrix {
            graph,
            entries,
            class: SignClass::SignFree,
        })
    }

    /// Reads the graph off the off-diagonal pattern of a symmetric matrix
    /// with nonnegative off-diagonal entries.
    pub fn from_pattern(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch("state matrix must be square".into()));
        }
        let n = entries.nrows();
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        let edges: Vec<(usize, usize)> = edges
            .filter(|&(i, j)| entries[(i, j)] != 0.0 || entries[(j, i)] != 0.0)
            .map(|(i, j)| (i + 1, j + 1))
            .collect();
        WeightMatrix::new(Graph::new(n, edges)?, entries)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn class(&self) -> SignClass {
        self.class
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }
}

/// Checks `x` is symmetric with off-diagonal pattern equal to the edges of
/// `g`, and, for [`SignClass::Positive`], positive edge entries.
pub fn check_class(g: &Graph, x: &DMatrix<f64>, class: SignClass) -> Result<()> {
    let n = g.n();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "state matrix is {}x{}, graph has {n} nodes",
            x.nrows(),
            x.ncols()
        )));
    }
    for i in 0..n {
        if !x[(i, i)].is_finite() {
            return Err(Error::InvalidInput(format!("entry ({0},{0}) is not finite", i + 1)));
        }
        for j in i + 1..n {
            let (a, b) = (x[(i, j)], x[(j, i)]);
            if !a.is_finite() || a != b {
                return Err(Error::InvalidInput(format!(
                    "entries ({},{}) and ({},{}) break symmetry",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1
                )));
            }
            let edge = g.has_edge(i + 1, j + 1);
            let ok = match (edge, class) {
                (false, _) => a == 0.0,
                (true, SignClass::Positive) => a > 0.0,
                (true, SignClass::SignFree) => a != 0.0,
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "entry ({},{}) = {a} violates the {:?} sign pattern (edge: {edge})",
                    i + 1,
                    j + 1,
                    class
                )));
            }
        }
    }
    Ok(())
}

/// Nonsymmetric state matrix of a directed network: nonnegative off the
/// diagonal, pattern given by its nonzeros.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedWeightMatrix {
    entries: DMatrix<f64>,
}

impl DirectedWeightMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch("state matrix must be square".into()));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in 0..n {
                let a = entries[(i, j)];
                if !a.is_finite() || (i != j && a < 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "entry ({},{}) = {a} must be finite and nonnegative off the diagonal",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(DirectedWeightMatrix { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalMode {
    /// Uniform on `[-hi, hi]`.
    Free,
    /// Rows sum to zero: the negated weighted Laplacian.
    Laplacian,
}

/// Random member of `Q_p(G)`: edge weights uniform on `[lo, hi]`.
pub fn random_weights(g: &Graph, seed: u64, range: (f64, f64), diagonal: DiagonalMode) -> Result<WeightMatrix> {
    random_weights_with(g, &mut seeded_rng(seed), range, diagonal)
}

pub fn random_weights_with<R: Rng + ?Sized>(
    g: &Graph,
    rng: &mut R,
    (lo, hi): (f64, f64),
    diagonal: DiagonalMode,
) -> Result<WeightMatrix> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "weight range [{lo}, {hi}] must satisfy 0 < lo <= hi"
        )));
    }
    let n = g.n();
    let mut x = DMatrix::zeros(n, n);
    for (i, j) in g.edges() {
        let w = rng.random_range(lo..=hi);
        x[(i - 1, j - 1)] = w;
        x[(j - 1, i - 1)] = w;
    }
    for i in 0..n {
        x[(i, i)] = match diagonal {
            DiagonalMode::Free => rng.random_range(-hi..=hi),
            DiagonalMode::Laplacian => -x.row(i).sum(),
        };
    }
    WeightMatrix::new(g.clone(), x)
}

/// Random nonsymmetric nonnegative matrix; each ordered pair `(i, j)`,
/// `i ≠ j`, carries a weight in `[lo, hi]` with probability `p`.
pub fn random_directed_weights<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    (lo, hi): (f64, f64),
    rng: &mut R,
) -> Result<DirectedWeightMatrix> {
    if !(lo > 0.0 && lo <= hi) {
        return Err(Error::InvalidInput(format!("weight range [{lo}, {hi}] is invalid")));
    }
    let mut x = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                x[(i, i)] = rng.random_range(-hi..=hi);
            } else if rng.random_bool(p.clamp(0.0, 1.0)) {
                x[(i, j)] = rng.random_range(lo..=hi);
            }
        }
    }
    DirectedWeightMatrix::new(x)
}

/// Markov parameters `N X^k M` for `k = 0..=order`; `data[k]` has one row
/// per output node and one column per input node.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovSequence {
    pub v_in: NodeSet,
    pub v_out: NodeSet,
    pub data: Vec<DMatrix<f64>>,
}

impl MarkovSequence {
    /// Highest power `K` available.
    pub fn order(&self) -> usize {
        self.data.len().saturating_sub(1)
    }

    /// `(X^k)_{ij}` for output node `i` and input node `j`.
    pub fn entry(&self, k: usize, i: usize, j: usize) -> Option<f64> {
        let row = self.v_out.position(i)?;
        let col = self.v_in.position(j)?;
        self.data.get(k).map(|m| m[(row, col)])
    }

    /// The sequence cut down to powers `0..=order`.
    pub fn truncated(&self, order: usize) -> MarkovSequence {
        MarkovSequence {
            v_in: self.v_in.clone(),
            v_out: self.v_out.clone(),
            data: self.data.iter().take(order + 1).cloned().collect(),
        }
    }

    /// Largest entrywise difference at power `k`, divided by
    /// `max(1, max |entry|)` at that power.
    pub fn max_scaled_difference(&self, other: &MarkovSequence) -> Option<f64> {
        if self.data.len() != other.data.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for (a, b) in self.data.iter().zip(&other.data) {
            if a.shape() != b.shape() {
                return None;
            }
            let scale = a.amax().max(b.amax()).max(1.0);
            worst = worst.max((a - b).amax() / scale);
        }
        Some(worst)
    }

    /// Checks every block is `rows × cols`.
    pub fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        match self.data.iter().position(|m| m.nrows() != rows || m.ncols() != cols) {
            None => Ok(()),
            Some(k) => Err(Error::DimensionMismatch(format!(
                "Markov parameter {k} is {}x{}, expected {rows}x{cols}",
                self.data[k].nrows(),
                self.data[k].ncols()
            ))),
        }
    }
}

/// Wire form: `{"v_in":[...],"v_out":[...],"K":k,"data":[[[...]]]}`.
#[derive(Serialize, Deserialize)]
struct MarkovJson {
    v_in: NodeSet,
    v_out: NodeSet,
    #[serde(rename = "K")]
    order: usize,
    data: Vec<Vec<Vec<f64>>>,
}

impl Serialize for MarkovSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MarkovJson {
            v_in: self.v_in.clone(),
            v_out: self.v_out.clone(),
            order: self.order(),
            data: self
                .data
                .iter()
                .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MarkovSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MarkovJson::deserialize(d)?;
        if raw.data.len() != raw.order + 1 {
            return Err(D::Error::custom(format!(
                "K = {} but data holds {} matrices",
                raw.order,
                raw.data.len()
            )));
        }
        let mut data = Vec::with_capacity(raw.data.len());
        for (k, rows) in raw.data.into_iter().enumerate() {
            let cols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != cols) {
                return Err(D::Error::custom(format!("data[{k}] has ragged rows")));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            data.push(DMatrix::from_row_slice(rows.len(), cols, &flat));
        }
        Ok(MarkovSequence {
            v_in: raw.v_in,
            v_out: raw.v_out,
            data,
        })
    }
}

/// Markov parameters of any square state matrix, by repeated
/// multiplication `X · (X^{k-1} M)`.
pub fn markov_parameters(x: &DMatrix<f64>, v_in: &NodeSet, v_out: &NodeSet, order: usize) -> Result<MarkovSequence> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch("state matrix must be square".into()));
    }
    let n = x.nrows();
    v_out.validate(n)?;
    let mut columns = selection_matrix(n, v_in)?;
    let rows: Vec<usize> = v_out.iter().map(|v| v - 1).collect();
    let mut data = Vec::with_capacity(order + 1);
    for k in 0..=order {
        if k > 0 {
            columns = x * &columns;
        }
        data.push(columns.select_rows(&rows));
    }
    Ok(MarkovSequence {
        v_in: v_in.clone(),
        v_out: v_out.clone(),
        data,
    })
}

pub fn markov_sequence(x: &WeightMatrix, v_in: &NodeSet, v_out: &NodeSet, order: usize) -> Result<MarkovSequence> {
    markov_parameters(x.entries(), v_in, v_out, order)
}

/// `N (sI - X)^{-1} M` by an LU solve against the selected columns.
pub fn transfer_eval(x: &DMatrix<f64>, v_in: &NodeSet, v_out: &NodeSet, s: Complex<f64>) -> Result<DMatrix<Complex<f64>>> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch("state matrix must be square".into()));
    }
    let n = x.nrows();
    v_out.validate(n)?;
    let m = selection_matrix(n, v_in)?.map(|v| Complex::new(v, 0.0));
    let shifted = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
        let d = if i == j { s } else { Complex::new(0.0, 0.0) };
        d - Complex::new(x[(i, j)], 0.0)
    });
    let lu = shifted.lu();
    let pivots = lu.u().diagonal().map(|z| z.norm());
    let singular = n > 0 && pivots.min() <= 1e-14 * pivots.max().max(f64::MIN_POSITIVE);
    let point = || format!("{}{:+}i", s.re, s.im);
    if singular {
        return Err(Error::SingularSample { point: point() });
    }
    let sol = lu.solve(&m).ok_or_else(|| Error::SingularSample { point: point() })?;
    let rows: Vec<usize> = v_out.iter().map(|v| v - 1).collect();
    Ok(sol.select_rows(&rows))
}

/// Which matrix class a counterexample must stay inside.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterexampleClass {
    /// Nonsymmetric, nonnegative off the diagonal. Needs `ε > 0`, `ε ≠ 1`.
    Directed,
    /// Symmetric with any off-diagonal signs. Needs `ε = -1`.
    SignFree,
}

impl CounterexampleClass {
    pub fn default_epsilon(self) -> f64 {
        match self {
            CounterexampleClass::Directed => 2.0,
            CounterexampleClass::SignFree => -1.0,
        }
    }
}

/// A second state matrix with the same Markov parameters as the first.
#[derive(Clone, Debug, PartialEq)]
pub enum Counterexample {
    /// `S^{-1} X S` with `S = diag(I, εI)`, the `εI` block on the hidden
    /// nodes.
    Similarity {
        matrix: DMatrix<f64>,
        epsilon: f64,
        hidden: NodeSet,
    },
    /// The hidden block is decoupled from the visible nodes, so the Markov
    /// parameters do not depend on it; the witness shifts its diagonal by 1.
    HiddenBlockIndependent { matrix: DMatrix<f64>, hidden: NodeSet },
}

impl Counterexample {
    pub fn matrix(&self) -> &DMatrix<f64> {
        match self {
            Counterexample::Similarity { matrix, .. } => matrix,
            Counterexample::HiddenBlockIndependent { matrix, .. } => matrix,
        }
    }

    pub fn hidden(&self) -> &NodeSet {
        match self {
            Counterexample::Similarity { hidden, .. } => hidden,
            Counterexample::HiddenBlockIndependent { hidden, .. } => hidden,
        }
    }
}

/// Builds `X̄ ≠ X` in the same class as `x` whose Markov parameters with
/// respect to `(v_in, v_out)` coincide with those of `x`. Possible exactly
/// when some node is neither an input nor an output.
pub fn scaling_counterexample(
    x: &DMatrix<f64>,
    v_in: &NodeSet,
    v_out: &NodeSet,
    class: CounterexampleClass,
    epsilon: f64,
) -> Result<Counterexample> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch("state matrix must be square".into()));
    }
    let n = x.nrows();
    v_in.validate(n)?;
    v_out.validate(n)?;
    match class {
        CounterexampleClass::Directed => {
            DirectedWeightMatrix::new(x.clone())?;
            if !(epsilon > 0.0 && epsilon != 1.0 && epsilon.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "directed counterexample needs a positive epsilon other than 1, got {epsilon}"
                )));
            }
        }
        CounterexampleClass::SignFree => {
            if x != &x.transpose() {
                return Err(Error::InvalidInput("sign-free counterexample needs a symmetric matrix".into()));
            }
            if epsilon != -1.0 {
                return Err(Error::InvalidInput(format!(
                    "sign-free counterexample keeps symmetry only for epsilon = -1, got {epsilon}"
                )));
            }
        }
    }

    let visible = v_in.union(v_out);
    let hidden = NodeSet::full(n).difference(&visible);
    if hidden.is_empty() {
        return Err(Error::NoHiddenNode);
    }
    let is_hidden: Vec<bool> = (1..=n).map(|v| hidden.contains(v)).collect();
    let coupled = (0..n).any(|i| (0..n).any(|j| is_hidden[i] != is_hidden[j] && x[(i, j)] != 0.0));

    if coupled {
        let scale = |i: usize| if is_hidden[i] { epsilon } else { 1.0 };
        let matrix = DMatrix::from_fn(n, n, |i, j| x[(i, j)] * scale(j) / scale(i));
        Ok(Counterexample::Similarity {
            matrix,
            epsilon,
            hidden,
        })
    } else {
        let mut matrix = x.clone();
        for v in hidden.iter() {
            matrix[(v - 1, v - 1)] += 1.0;
        }
        Ok(Counterexample::HiddenBlockIndependent { matrix, hidden })
    }
}
