//! Recovery of sparse source/sink terms of the pure-Neumann potential
//! equation from boundary data, using diagonally weighted l1 regularization,
//! together with checkable recoverability certificates.
//!
//! The pipeline is `mesh` -> `forward` (P1 FEM, dense forward matrix) ->
//! `spectral` (SVD, projection, weights) -> `solvers` / `certify`, with
//! `harness` reproducing the reference experiments.

pub mod certify;
pub mod error;
pub mod forward;
pub mod harness;
pub mod mesh;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
