//! Low-rank Newton solvers for nonlinear problems that depend on one scalar
//! parameter.
//!
//! The parameter set is split into contiguous subsets. On each subset the
//! problem at the upper-median parameter is solved by Newton's method, and
//! that approximation seeds a single Newton step for the whole subset at
//! once: with the Jacobian frozen at the median, the per-parameter updates
//! stack into a generalized Sylvester matrix equation with a rank-two
//! right-hand side, which a preconditioned Chebyshev semi-iteration solves in
//! truncated low-rank form. The reference model is a 1D viscous-Burgers fluid
//! coupled to a linear elastic bar through a shared interface unknown, with
//! the solid shear modulus as the parameter.
//!
//! Modules:
//! - [`linalg`]: CSR matrices, banded LU, low-rank factor arithmetic,
//!   eigenvalue estimation.
//! - [`partition`]: contiguous balanced parameter splitting, upper medians.
//! - [`problem`]: the residual/Jacobian abstraction and the reference model.
//! - [`newton`]: per-parameter Newton iteration and the consecutive sweep.
//! - [`matrixeq`]: the subset matrix equation and its Chebyshev solver.
//! - [`driver`]: end-to-end runs, comparison, CSV/JSON exports.

pub mod driver;
pub mod linalg;
pub mod matrixeq;
pub mod newton;
pub mod partition;
pub mod problem;

pub use driver::{
    compare, evaluate, export_csv, export_json, export_singular_values, run_algorithm1,
    run_baseline, Algorithm1Config, BlockApproximation, ComparisonReport, DriverError, RunReport,
};
pub use linalg::{DenseMatrix, Factorization, LinalgError, LowRankFactors, SparseMatrix};
pub use matrixeq::{
    build_rhs, chebyshev_solve, subset_newton_step, ChebyshevConfig, MatrixEqError,
    PreconditionerAnchor, SpectrumOptions, SubsetSolveResult, SylvesterOperator,
};
pub use newton::{
    baseline_sweep, newton_solve, relative_residual, InitialGuess, NewtonConfig, NewtonError,
    NewtonResult,
};
pub use partition::{upper_median_index, ParameterPartition, ParameterSet, PartitionError};
pub use problem::{
    build_burgers_fsi_1d, poisson_ratio, ModelConfig, ModelKind, ParameterSpec,
    ParametricProblem, ProblemError,
};
