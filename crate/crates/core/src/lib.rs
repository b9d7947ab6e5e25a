//! Plücker tree ideals and the secants of their Pfaffian degenerations.
//!
//! The crate is organised around a handful of objects:
//!
//! * [`tree::PhyloTree`]: binary leaf-labelled trees with circular embeddings,
//!   quartets, splits, clusters and the path incidence matrix.
//! * [`poly::SparsePoly`]: integer polynomials in Plücker variables `p_ij`.
//! * [`pfaffian`]: Pfaffians, crossing monomials, initial forms under tree
//!   metrics, quartet binomials and linear-occurrence witnesses.
//! * [`linalg`]: exact rank and solve over the rationals and prime fields.
//! * [`draisma`]: winning directions, witness search, lifting and certificate
//!   verification for lower bounds on the second secant.
//! * [`dimension`]: cherry and cluster bounds, Jacobian rank estimates and
//!   equality verdicts.

// Matrix code reads better with explicit row and column indices.
#![allow(clippy::needless_range_loop)]
pub mod dimension;
pub mod draisma;
pub mod linalg;
pub mod pfaffian;
pub mod poly;
pub mod rational;
pub mod tree;

pub use poly::{Monomial, PluckerVar, SparsePoly};
pub use tree::{CircularEmbedding, EdgeId, PhyloTree};
