//! Deterministic dense and sparse linear algebra kernels.

pub mod dense;
pub mod sparse;
pub mod subspace;

pub use dense::{
    dense_cholesky, dense_generalized_eigen, dense_sym_eigen, dot, DenseSymMatrix, EigenPairs, Mat,
};
pub use sparse::{
    neumann_singular_solve, spd_solve, BandCholesky, SparseBuilder, SparseSymMatrix, SpdSolver,
};
pub use subspace::generalized_lowest_modes;
