//! Zero forcing identifiability certificates and constructive edge-weight
//! recovery for undirected networks of linear systems.
//!
//! ```
//! use netident::{Graph, NodeSet};
//! use netident::netsim::{markov_sequence, random_weights, DiagonalMode};
//! use netident::reconstruct::identify;
//!
//! let g = Graph::path(4);
//! let x = random_weights(&g, 1, (0.5, 2.0), DiagonalMode::Free)?;
//! let w = NodeSet::from([1]);
//! let markov = markov_sequence(&x, &w, &w, 8)?;
//! let r = identify(&markov, &g, &NodeSet::full(4))?;
//! assert!((&r.matrix - x.entries()).amax() < 1e-9);
//! # Ok::<(), netident::Error>(())
//! ```
//!
//! The guide in `book/` walks through each module.

pub mod cli;
pub mod error;
pub mod generate;
pub mod graph;
pub mod higher_order;
pub mod identifiability;
pub mod io;
pub mod netsim;
pub mod reconstruct;
pub mod zero_forcing;

pub use error::{Error, Result};
pub use graph::{selection_matrix, Graph, InducedSubgraph, NodeSet};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/zero-forcing.md")]
    mod zero_forcing {}
    #[doc = include_str!("../../../book/src/identifiability.md")]
    mod identifiability {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/higher-order.md")]
    mod higher_order {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
