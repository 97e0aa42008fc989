//! Numerical laboratory for periodic homogenization of
//! `L_eps = -div(A(x/eps) grad)` on the unit square.
//!
//! The crate computes cell correctors and effective tensors, Dirichlet
//! correctors, Dirichlet spectra of the oscillating and homogenized
//! operators, boundary fluxes of eigenfunctions, and the sweeps that measure
//! how these quantities scale with `eps` and the eigenvalue.

pub mod boundary;
pub mod cell;
pub mod coefficient;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod export;
pub mod linalg;
pub mod mesh;
pub mod onedim;

pub use coefficient::{CertificationReport, CoefficientField, FieldKind, Tensor};
pub use error::{Error, Result};
pub use linalg::{EigenPair, SparseSymMatrix};
pub use mesh::{DomainGrid, TorusGrid};

/// Version of the numerical core, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
