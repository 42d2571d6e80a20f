//! Sparse and dense linear-algebra kernels used by the solvers: CSR storage,
//! a banded direct factorization, low-rank factor arithmetic and eigenvalue
//! estimation.

mod eigs;
mod lowrank;
mod lu;
mod sparse;

pub use eigs::{arnoldi_eigs, dense_eigs, DENSE_EIG_THRESHOLD};
pub(crate) use lowrank::accurate_svd;
pub use lowrank::LowRankFactors;
pub use lu::Factorization;
pub use sparse::SparseMatrix;

use thiserror::Error;

/// Dense matrices are plain `nalgebra` dynamic matrices (column-major).
pub type DenseMatrix = nalgebra::DMatrix<f64>;

#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    #[error("{context}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not square ({n_rows}x{n_cols})")]
    NotSquare { n_rows: usize, n_cols: usize },
    #[error("singular pivot at column {pivot}")]
    SingularMatrix { pivot: usize },
    #[error("eigensolver did not converge within {max_iter} iterations")]
    EigsNoConvergence { max_iter: usize },
    #[error("invalid triplet entry ({row}, {col}) for a {n_rows}x{n_cols} matrix")]
    TripletOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
}
