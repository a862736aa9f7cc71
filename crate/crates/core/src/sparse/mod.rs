//! Sparse matrices, saddle-point block composition and direct solves.

mod matrix;
mod solver;

pub use matrix::{compose_saddle, SparseMatrix, TripletBuilder};
pub use solver::{solve, DirectSolver, LinearSolveReport, DEFAULT_TOL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("{op}: dimension mismatch, expected {expected:?}, found {found:?}")]
    DimensionMismatch { op: &'static str, expected: (usize, usize), found: (usize, usize) },
    #[error("inconsistent block shape at block ({block_row}, {block_col})")]
    BlockShape { block_row: usize, block_col: usize },
    #[error("matrix is not square ({nrows} x {ncols})")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("matrix is structurally singular (no pivot at step {index})")]
    Singular { index: usize },
    #[error("matrix is numerically singular (non-finite solution)")]
    NumericallySingular,
    #[error("relative residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("factorization backend failed: {0}")]
    Backend(String),
}
