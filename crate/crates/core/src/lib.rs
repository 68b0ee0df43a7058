//! Hybrid graphs: a data model unifying simple graphs, hypergraphs and
//! hierarchical graphs, with hyperedge construction, statistics, subgraph
//! samplers and a small GNN training harness.
//!
//! ```
//! use hgb::graph::{GraphKind, HybridGraph, Labels};
//! use hgb::matrix::Matrix;
//!
//! let g = HybridGraph::new(Matrix::zeros(4, 1), Labels::Values(vec![0.0; 4]))
//!     .with_edges([[0, 1], [1, 2]])
//!     .with_hyperedges(vec![vec![0, 2, 3]]);
//! assert_eq!(g.classify().unwrap(), GraphKind::Hypergraph);
//! ```

pub mod construct;
pub mod datasets;
pub mod gnn;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod sample;
pub mod stats;

pub use graph::{GraphKind, HybridGraph, Labels, Task};
pub use matrix::{Csr, Matrix};

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hybrid-graphs.md")]
    mod hybrid_graphs {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/construction.md")]
    mod construction {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
