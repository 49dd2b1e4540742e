//! Computational bipermutative categories and charted 2-vector bundles.
//!
//! This crate implements, over exact Gaussian-rational or complex-double
//! scalars:
//!
//! * the bipermutative categories of permutations, complex vector spaces
//!   and graded lines, with their sign-carrying coherency isomorphisms
//!   ([`perm`], [`biperm`]);
//! * monoidal categories of object/morphism matrices, their associators
//!   and the graded-line determinant functors ([`matrixcat`]);
//! * sign-decorated (oriented) weakly invertible matrices and the strict
//!   monoidal determinant-gerbe functor ([`oriented`]);
//! * charted 2-vector bundles over finite ordered covers, the orientation
//!   obstruction 3-cocycle, GF(2) lifting with certificates, and
//!   determinant-gerbe extraction ([`charted`], [`gf2`]);
//! * sampled connective structures: induced and gauge-twisted products of
//!   connection matrices, the partition-of-unity existence construction,
//!   and parallel-transport compatibility checks ([`connective`]).
//!
//! Per-point and per-entry loops run data-parallel through rayon when the
//! default `parallel` feature is enabled; disabling default features selects
//! a sequential fallback with identical results.

pub mod biperm;
pub mod charted;
pub mod connective;
pub mod error;
pub mod gen;
pub mod gf2;
pub mod linalg;
pub mod matrixcat;
pub mod oriented;
mod par;
pub mod perm;
pub mod scalar;
pub mod schema;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
