//! Maximum-weight vertex-set tuples for first-order properties of sparse graphs.
//!
//! A sentence is compiled into a quantifier-free formula over counters, which a dynamic
//! program over tree decompositions can evaluate from capped counts. Covers of the graph
//! by pieces of small treewidth turn the exact solver into an approximation.

pub mod corpus;
pub mod dp;
pub mod driver;
pub mod error;
pub mod graph;
pub mod logic;
pub mod qelim;
pub mod sparsity;

pub use error::{Error, Result};
