use thiserror::Error;

use crate::graph::NodeSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {node} is out of range for a graph on nodes 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(
        "exact search refuses graphs with {n} nodes (cap is {cap}); use the heuristic instead"
    )]
    SearchCapExceeded { n: usize, cap: usize },

    #[error("sI - X is singular at sample point s = {point}")]
    SingularSample { point: String },

    #[error("no hidden node: every node is an input or an output")]
    NoHiddenNode,

    #[error("forcing precondition violated: {0}")]
    ForcePrecondition(String),

    #[error(
        "measured data inconsistent with Q_p(G): forced edge weight vanishes on {{{u},{v}}} (squared weight {value:e})"
    )]
    DegenerateWeight { u: usize, v: usize, value: f64 },

    #[error("data does not come from a Q_p(G) system on this graph: {0}")]
    InconsistentData(String),

    #[error("insufficient Markov data: order {available} available, {required} required")]
    InsufficientData { available: usize, required: usize },

    #[error(
        "target nodes {outside:?} lie outside the derived set of V_I ∩ V_O; run `ident certify` to see which nodes are certified"
    )]
    UncertifiedTarget { outside: NodeSet },

    #[error("deconvolution blocked: C (EK)^{k} B vanishes")]
    CouplingBlocked { k: usize },
}

impl Error {
    /// Errors caused by malformed or out-of-contract input, as opposed to
    /// well-formed input on which the requested analysis fails.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NodeOutOfRange { .. }
                | Error::InvalidInput(_)
                | Error::DimensionMismatch(_)
                | Error::Format(_)
        )
    }
}
