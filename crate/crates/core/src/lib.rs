//! Word sets as linear subspaces of an embedding space.
//!
//! A set of words is represented by the span of their vectors. On top of that
//! representation the crate provides the quantum-logic set operations (sum
//! space, intersection, orthogonal complement), hard and soft membership,
//! and two applications:
//!
//! - [`similarity`]: sentence-pair scoring where each token is matched
//!   against the span of the other sentence's tokens, alongside the
//!   max-cosine BERTScore form and an average-vector cosine baseline.
//! - [`retrieval`]: set expansion, ranking a vocabulary by membership in the
//!   span of a few seed words, with R@k and median-rank evaluation.
//!
//! [`eval`] wires these up to files and reports; the `subspace-sets` binary
//! exposes it on the command line.

pub mod embeddings;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod retrieval;
pub mod similarity;
pub mod subspace;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector};
pub use subspace::Subspace;
