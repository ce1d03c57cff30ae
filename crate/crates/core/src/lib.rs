//! Bundled matrix product states built from exact eigenstates of small spin
//! chains, together with the density-matrix diagnostics used to decide which
//! excitations can share a bond basis.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense symmetric eigendecomposition and one-sided Jacobi SVD
//!   with fixed ordering and sign conventions.
//! - [`spin`]: Pauli strings, the transverse-field Ising and XXZ chains, and
//!   their full spectra.
//! - [`density`]: one-body reduced density matrices, natural orbitals,
//!   truncated traces, truncation errors and the similar/dissimilar test.
//! - [`energy`]: the ultra-local energy-difference metric, the element-wise
//!   bound for large energy differences, and a metric-axiom harness.
//! - [`mps`]: (bundled) matrix product states by sequential reshape + SVD.
//! - [`overlap`]: weighted overlap matrices between bundles at a bond.
//! - [`io`], [`experiment`], [`verify`]: file formats, the experiment drivers
//!   behind the command-line tool, and the invariant suite.

pub mod density;
pub mod energy;
mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod mps;
pub mod overlap;
pub mod spin;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, LinalgError};
