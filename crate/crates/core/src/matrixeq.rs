//! The one-Newton-step matrix equation on a parameter subset and its
//! truncated low-rank solver.
//!
//! With a converged median approximation `x_med` frozen, the Newton updates
//! for the whole subset stack into a generalized Sylvester equation
//!
//! ```text
//! A0 S + A1 S D + rho_f A_conv(x_med) S = B
//! ```
//!
//! with `D = diag(mu_i - mu_ref)` and a right-hand side of rank at most two.
//! The equation is preconditioned by the LU factors of the system matrix at
//! the subset's mean shift and solved by a two-term Chebyshev semi-iteration
//! in truncated low-rank arithmetic.

use crate::linalg::{
    arnoldi_eigs, dense_eigs, Factorization, LinalgError, LowRankFactors, SparseMatrix,
    DENSE_EIG_THRESHOLD,
};
use crate::partition::{ParameterPartition, PartitionError};
use crate::problem::{ParametricProblem, ProblemError};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum MatrixEqError {
    #[error("invalid Chebyshev config: {reason}")]
    InvalidConfig { reason: String },
    #[error("estimated spectral interval is indefinite (min real part {lambda_lo})")]
    IndefinitePencil { lambda_lo: f64 },
    #[error("Chebyshev iteration diverged after {} residual evaluations", history.len())]
    Diverged { history: Vec<f64> },
    #[error("factor shape mismatch: {context}")]
    ShapeMismatch { context: &'static str },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Which shift anchors the preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerAnchor {
    /// Arithmetic mean of the subset shifts.
    MeanShift,
    /// Upper-median shift of the subset.
    MedianShift,
}

/// The frozen-Jacobian operator `S -> A0 S + A1 S D + rho_f A_conv_med S`
/// acting on `n x |I_k|` matrices in factored form.
pub struct SylvesterOperator {
    a0: SparseMatrix,
    a1: SparseMatrix,
    a_conv_med: SparseMatrix,
    rho_f: f64,
    shifts: Vec<f64>,
}

impl SylvesterOperator {
    pub fn new(
        a0: SparseMatrix,
        a1: SparseMatrix,
        a_conv_med: SparseMatrix,
        rho_f: f64,
        shifts: Vec<f64>,
    ) -> Result<Self, MatrixEqError> {
        let n = a0.n_rows();
        if a0.n_cols() != n
            || a1.n_rows() != n
            || a1.n_cols() != n
            || a_conv_med.n_rows() != n
            || a_conv_med.n_cols() != n
        {
            return Err(MatrixEqError::ShapeMismatch {
                context: "operator blocks must be square and of one size",
            });
        }
        if shifts.is_empty() {
            return Err(MatrixEqError::ShapeMismatch {
                context: "shift diagonal must be nonempty",
            });
        }
        Ok(Self {
            a0,
            a1,
            a_conv_med,
            rho_f,
            shifts,
        })
    }

    /// Operator for subset `k` of a partitioned problem, with the convection
    /// Jacobian frozen at `x_med`.
    pub fn from_problem(
        p: &ParametricProblem,
        partition: &ParameterPartition,
        k: usize,
        x_med: &[f64],
    ) -> Result<Self, MatrixEqError> {
        let (shifts, _) = partition.subset_diag(k, p.mu_ref())?;
        let a_conv = p.assemble_conv(x_med)?;
        Self::new(
            p.a0().clone(),
            p.a1().clone(),
            a_conv,
            p.rho_f(),
            shifts,
        )
    }

    pub fn n(&self) -> usize {
        self.a0.n_rows()
    }

    pub fn n_params(&self) -> usize {
        self.shifts.len()
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    /// The single-column system matrix `A0 + shift A1 + rho_f A_conv_med`.
    pub fn system_matrix(&self, shift: f64) -> Result<SparseMatrix, LinalgError> {
        SparseMatrix::linear_combination(&[
            (1.0, &self.a0),
            (shift, &self.a1),
            (self.rho_f, &self.a_conv_med),
        ])
    }

    /// Apply the operator in factored form. The result has rank at most
    /// `3 * rank(s)` before truncation.
    pub fn apply(&self, s: &LowRankFactors) -> Result<LowRankFactors, MatrixEqError> {
        if s.n_rows() != self.n() || s.n_cols() != self.n_params() {
            return Err(MatrixEqError::ShapeMismatch {
                context: "operand factors do not match operator dimensions",
            });
        }
        let term0 = LowRankFactors::new(self.a0.mul_dense(s.u())?, s.v().clone())?;
        let mut dv = s.v().clone();
        for (i, &d) in self.shifts.iter().enumerate() {
            for r in 0..dv.ncols() {
                dv[(i, r)] *= d;
            }
        }
        let term1 = LowRankFactors::new(self.a1.mul_dense(s.u())?, dv)?;
        let term2 = LowRankFactors::new(
            self.a_conv_med.mul_dense(s.u())?.scale(self.rho_f),
            s.v().clone(),
        )?;
        Ok(term0.add(&term1)?.add(&term2)?)
    }

    /// LU factors of the mean-based preconditioner
    /// `A0 + mean(D) A1 + rho_f A_conv_med`.
    pub fn mean_preconditioner(&self) -> Result<Factorization, MatrixEqError> {
        self.preconditioner(PreconditionerAnchor::MeanShift)
    }

    pub fn preconditioner(
        &self,
        anchor: PreconditionerAnchor,
    ) -> Result<Factorization, MatrixEqError> {
        let shift = match anchor {
            PreconditionerAnchor::MeanShift => {
                self.shifts.iter().sum::<f64>() / self.shifts.len() as f64
            }
            PreconditionerAnchor::MedianShift => {
                self.shifts[crate::partition::upper_median_index(self.shifts.len())
                    .expect("shifts nonempty")
                    - 1]
            }
        };
        Ok(Factorization::new(&self.system_matrix(shift)?)?)
    }

    /// Estimate the Chebyshev interval from the eigenvalues of
    /// `P^-1 A(min shift)` and `P^-1 A(max shift)`: `d` is the midpoint of
    /// the real parts, `c` the half-width stretched by `opts.safety`.
    ///
    /// A singleton subset is preconditioned exactly, so it returns
    /// `(1, 0)` without touching an eigensolver.
    pub fn estimate_spectrum(
        &self,
        pfact: &Factorization,
        opts: &SpectrumOptions,
    ) -> Result<(f64, f64), MatrixEqError> {
        let lo_shift = self.shifts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi_shift = self
            .shifts
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if self.n_params() == 1 || lo_shift == hi_shift {
            return Ok((1.0, 0.0));
        }
        let mut lambda_lo = f64::INFINITY;
        let mut lambda_hi = f64::NEG_INFINITY;
        for shift in [lo_shift, hi_shift] {
            let a = self.system_matrix(shift)?;
            let eigenvalues = if self.n() <= opts.dense_threshold {
                let m = pfact.solve_multi(&a.to_dense())?;
                dense_eigs(&m)?
            } else {
                let op = |x: &[f64]| -> Result<Vec<f64>, LinalgError> {
                    pfact.solve(&a.spmv(x)?)
                };
                arnoldi_eigs(op, self.n(), opts.krylov_dim, opts.seed)?
            };
            for ev in eigenvalues {
                lambda_lo = lambda_lo.min(ev.re);
                lambda_hi = lambda_hi.max(ev.re);
            }
        }
        if lambda_lo <= 0.0 {
            return Err(MatrixEqError::IndefinitePencil { lambda_lo });
        }
        let d = 0.5 * (lambda_hi + lambda_lo);
        let c = 0.5 * opts.safety * (lambda_hi - lambda_lo);
        Ok((d, c))
    }
}

/// Knobs for spectral-interval estimation.
#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    /// Multiplier widening the half-width `c` (>= 1).
    pub safety: f64,
    /// Problems up to this size use the dense eigensolver, larger ones the
    /// Arnoldi process.
    pub dense_threshold: usize,
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            safety: 1.1,
            dense_threshold: DENSE_EIG_THRESHOLD,
            krylov_dim: 30,
            seed: 42,
        }
    }
}

/// Configuration of one Chebyshev subset solve. `d` and `c` describe the
/// spectral interval `[d - c, d + c]` of the preconditioned operator.
#[derive(Debug, Clone)]
pub struct ChebyshevConfig {
    pub d: f64,
    pub c: f64,
    pub max_rank: usize,
    pub trunc_tol: f64,
    pub max_iter: usize,
    pub residual_tol: f64,
}

impl ChebyshevConfig {
    fn validate(&self) -> Result<(), MatrixEqError> {
        if !(self.c >= 0.0 && self.c < self.d) {
            return Err(MatrixEqError::InvalidConfig {
                reason: format!("need 0 <= c < d (got d={}, c={})", self.d, self.c),
            });
        }
        if self.max_rank == 0 {
            return Err(MatrixEqError::InvalidConfig {
                reason: "max_rank must be at least 1".to_string(),
            });
        }
        if self.max_iter == 0 {
            return Err(MatrixEqError::InvalidConfig {
                reason: "max_iter must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SubsetSolveResult {
    pub s_hat: LowRankFactors,
    /// Number of Chebyshev updates performed.
    pub iterations: usize,
    /// Final preconditioned residual relative to the preconditioned
    /// right-hand side.
    pub final_residual: f64,
    /// Spectrum estimates the iteration ran with.
    pub d: f64,
    pub c: f64,
}

/// The rank-at-most-2 right-hand side
/// `B = -g(x_med, 0) (x) (1,..,1) - A1 x_med (x) v^T`. Exactly zero columns
/// of the factors are dropped, so a homogeneous problem yields rank 0.
pub fn build_rhs(
    p: &ParametricProblem,
    x_med: &[f64],
    v: &[f64],
) -> Result<LowRankFactors, MatrixEqError> {
    if v.is_empty() {
        return Err(MatrixEqError::ShapeMismatch {
            context: "parameter value vector must be nonempty",
        });
    }
    let g0 = p.residual(x_med, 0.0)?;
    let a1x = p.a1().spmv(x_med)?;
    let m = v.len();
    let mut out = LowRankFactors::zero(p.n_dof(), m);
    if g0.iter().any(|x| *x != 0.0) {
        let neg_g0: Vec<f64> = g0.iter().map(|x| -x).collect();
        out = out.add(&LowRankFactors::from_outer(&neg_g0, &vec![1.0; m]))?;
    }
    if a1x.iter().any(|x| *x != 0.0) {
        let neg_a1x: Vec<f64> = a1x.iter().map(|x| -x).collect();
        out = out.add(&LowRankFactors::from_outer(&neg_a1x, v))?;
    }
    Ok(out)
}

/// Two-term Chebyshev semi-iteration for `P^-1 A(S) = P^-1 B` on the interval
/// `[d - c, d + c]`, in truncated low-rank arithmetic with true-residual
/// stopping.
///
/// For `c = 0` the recurrence degenerates to preconditioned Richardson with
/// step `1/d`, which with an exact preconditioner converges in one update.
pub fn chebyshev_solve(
    op: &SylvesterOperator,
    pfact: &Factorization,
    b: &LowRankFactors,
    cfg: &ChebyshevConfig,
) -> Result<SubsetSolveResult, MatrixEqError> {
    cfg.validate()?;
    let (n, m) = (op.n(), op.n_params());
    if b.n_rows() != n || b.n_cols() != m {
        return Err(MatrixEqError::ShapeMismatch {
            context: "right-hand side factors do not match operator dimensions",
        });
    }
    let precond = |x: &LowRankFactors| -> Result<LowRankFactors, MatrixEqError> {
        if x.rank() == 0 {
            return Ok(x.clone());
        }
        Ok(LowRankFactors::new(
            pfact.solve_multi(x.u())?,
            x.v().clone(),
        )?)
    };
    let pb_norm = precond(b)?.truncate(b.rank().max(1), 0.0).frob_norm();
    let target = cfg.residual_tol * pb_norm;

    let mut s = LowRankFactors::zero(n, m);
    let mut delta: Option<LowRankFactors> = None;
    let sigma = if cfg.c > 0.0 { cfg.d / cfg.c } else { 0.0 };
    let mut rho_prev = 0.0;
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut min_residual = f64::INFINITY;
    let final_residual;
    loop {
        // true preconditioned residual, recomputed from the current iterate
        let applied = op.apply(&s)?;
        let z = precond(&b.add(&applied.scaled(-1.0))?)?.truncate(cfg.max_rank, cfg.trunc_tol);
        let residual = z.frob_norm();
        history.push(residual);
        min_residual = min_residual.min(residual);
        // Divergence means sustained growth: well above the best residual so
        // far AND worse than where the iteration started. Rank-starved runs
        // wobble above their minimum without ever exceeding the start; those
        // stagnate until max_iter instead of erroring.
        if residual > 10.0 * min_residual && residual > history[0] {
            return Err(MatrixEqError::Diverged { history });
        }
        if residual <= target || iterations >= cfg.max_iter {
            final_residual = residual;
            break;
        }
        iterations += 1;
        let next_delta = if cfg.c == 0.0 {
            z.scaled(1.0 / cfg.d)
        } else if iterations == 1 {
            rho_prev = 1.0 / sigma;
            z.scaled(1.0 / cfg.d)
        } else {
            let rho = 1.0 / (2.0 * sigma - rho_prev);
            let prev = delta.as_ref().expect("delta set after first update");
            let combined = prev
                .scaled(rho * rho_prev)
                .add(&z.scaled(2.0 * rho / cfg.c))?
                .truncate(cfg.max_rank, cfg.trunc_tol);
            rho_prev = rho;
            combined
        };
        s = s.add(&next_delta)?.truncate(cfg.max_rank, cfg.trunc_tol);
        delta = Some(next_delta);
    }
    Ok(SubsetSolveResult {
        s_hat: s,
        iterations,
        final_residual: if pb_norm > 0.0 {
            final_residual / pb_norm
        } else {
            0.0
        },
        d: cfg.d,
        c: cfg.c,
    })
}

/// Options for a whole subset step (everything except the spectral interval,
/// which is estimated on the fly unless overridden).
#[derive(Debug, Clone)]
pub struct SubsetStepOptions {
    pub max_rank: usize,
    pub trunc_tol: f64,
    pub max_iter: usize,
    pub residual_tol: f64,
    pub anchor: PreconditionerAnchor,
    pub spectrum: SpectrumOptions,
    pub spectrum_override: Option<(f64, f64)>,
}

impl Default for SubsetStepOptions {
    fn default() -> Self {
        Self {
            max_rank: 9,
            trunc_tol: 1e-10,
            max_iter: 100,
            residual_tol: 1e-8,
            anchor: PreconditionerAnchor::MeanShift,
            spectrum: SpectrumOptions::default(),
            spectrum_override: None,
        }
    }
}

/// One matrix-equation Newton step on subset `k`, starting from the rank-1
/// initial guess `x_med (x) (1,..,1)`.
#[derive(Debug, Clone)]
pub struct SubsetStep {
    pub x_med: Vec<f64>,
    pub solve: SubsetSolveResult,
}

impl SubsetStep {
    /// Column `local` of the updated block `x_med (x) (1,..,1) + S_hat`.
    pub fn column(&self, local: usize) -> Vec<f64> {
        let mut out = self.solve.s_hat.column(local);
        for (o, x) in out.iter_mut().zip(&self.x_med) {
            *o += x;
        }
        out
    }
}

/// Assemble and solve the subset matrix equation around `x_med`:
/// build the operator and right-hand side, factor the preconditioner,
/// estimate the spectral interval and run the Chebyshev solve.
pub fn subset_newton_step(
    p: &ParametricProblem,
    partition: &ParameterPartition,
    k: usize,
    x_med: &[f64],
    opts: &SubsetStepOptions,
) -> Result<SubsetStep, MatrixEqError> {
    let (_, v) = partition.subset_diag(k, p.mu_ref())?;
    let op = SylvesterOperator::from_problem(p, partition, k, x_med)?;
    let b = build_rhs(p, x_med, &v)?;
    let pfact = op.preconditioner(opts.anchor)?;
    let (d, c) = match opts.spectrum_override {
        Some(dc) => dc,
        None => op.estimate_spectrum(&pfact, &opts.spectrum)?,
    };
    let cfg = ChebyshevConfig {
        d,
        c,
        max_rank: opts.max_rank,
        trunc_tol: opts.trunc_tol,
        max_iter: opts.max_iter,
        residual_tol: opts.residual_tol,
    };
    let solve = chebyshev_solve(&op, &pfact, &b, &cfg)?;
    Ok(SubsetStep {
        x_med: x_med.to_vec(),
        solve,
    })
}
