//! Sparse symmetric storage, direct and iterative solvers, and the
//! generalized eigensolver for stiffness/mass pencils.

mod eigen;
mod solve;
mod sparse;

pub use eigen::{dense_symmetric_eigen, smallest_eigenpairs, smallest_eigenpairs_with, EigenOptions, EigenPair};
pub use solve::{conjugate_gradient, factor_solve, CgOutcome, Cholesky};
pub use sparse::{axpy, dot, norm2, SparseSymMatrix};
