//! Per-parameter Newton iteration with direct solves, plus the consecutive
//! sweep over a whole parameter set. This is both the baseline the low-rank
//! method is compared against and the producer of the median approximations.

use crate::linalg::{Factorization, LinalgError};
use crate::partition::ParameterSet;
use crate::problem::{ParametricProblem, ProblemError};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum NewtonError {
    #[error("invalid Newton config: {reason}")]
    InvalidConfig { reason: String },
    #[error("Jacobian singular at iteration {iteration} (pivot {pivot})")]
    Singular { iteration: usize, pivot: usize },
    #[error("iterates became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Initial guess policy for the Newton iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Zero,
    /// Start from the Dirichlet load vector `b_D`.
    DirichletData,
    WarmStart(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialGuess,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 50,
            initial: InitialGuess::DirichletData,
        }
    }
}

impl NewtonConfig {
    fn validate(&self) -> Result<(), NewtonError> {
        if !(self.tol > 0.0) {
            return Err(NewtonError::InvalidConfig {
                reason: format!("tol must be positive (got {})", self.tol),
            });
        }
        if self.max_iter == 0 {
            return Err(NewtonError::InvalidConfig {
                reason: "max_iter must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residuals, one entry per visited iterate (initial guess
    /// included).
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `|g(x, mu)|_2 / |g(b_D, mu)|_2`. A vanishing
/// normalization (homogeneous problems) falls back to the absolute residual
/// being exactly zero.
pub fn relative_residual(
    p: &ParametricProblem,
    x: &[f64],
    mu: f64,
) -> Result<f64, ProblemError> {
    let num = norm2(&p.residual(x, mu)?);
    let den = norm2(&p.residual(p.b_d(), mu)?);
    Ok(if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

/// Newton iteration for `g(x, mu) = 0`: solve
/// `J(x_{j-1}, mu) s = -g(x_{j-1}, mu)`, update `x_j = x_{j-1} + s`, stop as
/// soon as the relative residual drops to `cfg.tol` or `cfg.max_iter` steps
/// were taken. Non-convergence within the budget is reported through the
/// `converged` flag, not as an error.
pub fn newton_solve(
    p: &ParametricProblem,
    mu: f64,
    cfg: &NewtonConfig,
) -> Result<NewtonResult, NewtonError> {
    cfg.validate()?;
    let mut x = match &cfg.initial {
        InitialGuess::Zero => vec![0.0; p.n_dof()],
        InitialGuess::DirichletData => p.b_d().to_vec(),
        InitialGuess::WarmStart(v) => v.clone(),
    };
    let den = norm2(&p.residual(p.b_d(), mu)?);
    let rel = |g: &[f64]| {
        let num = norm2(g);
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };

    let mut g = p.residual(&x, mu)?;
    let mut history = vec![rel(&g)];
    let mut iterations = 0;
    while history[iterations] > cfg.tol && iterations < cfg.max_iter {
        let jac = p.jacobian(&x, mu)?;
        let fact = Factorization::new(&jac).map_err(|e| match e {
            LinalgError::SingularMatrix { pivot } => NewtonError::Singular {
                iteration: iterations + 1,
                pivot,
            },
            other => NewtonError::Linalg(other),
        })?;
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let step = fact.solve(&rhs)?;
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi += si;
        }
        iterations += 1;
        g = p
            .residual(&x, mu)
            .map_err(|e| match e {
                ProblemError::NonFinite { .. } => NewtonError::NonFinite { iteration: iterations },
                other => NewtonError::Problem(other),
            })?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(NewtonError::NonFinite { iteration: iterations });
        }
        history.push(rel(&g));
    }
    let converged = *history.last().expect("history nonempty") <= cfg.tol;
    Ok(NewtonResult {
        x,
        iterations,
        residual_history: history,
        converged,
    })
}

/// Outcome of one parameter inside a sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub index: usize,
    pub mu: f64,
    pub outcome: Result<NewtonResult, NewtonError>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub warm_start: bool,
}

impl SweepReport {
    /// Newton steps summed over all successfully solved parameters.
    pub fn total_iterations(&self) -> usize {
        self.entries
            .iter()
            .filter_map(|e| e.outcome.as_ref().ok().map(|r| r.iterations))
            .sum()
    }

    pub fn all_converged(&self) -> bool {
        self.entries
            .iter()
            .all(|e| matches!(&e.outcome, Ok(r) if r.converged))
    }
}

/// Solve every parameter in ascending order. With `warm_start`, each problem
/// starts from the most recent successful solution; failures are recorded and
/// the sweep continues.
pub fn baseline_sweep(
    p: &ParametricProblem,
    set: &ParameterSet,
    cfg: &NewtonConfig,
    warm_start: bool,
) -> SweepReport {
    let mut entries = Vec::with_capacity(set.len());
    let mut last_solution: Option<Vec<f64>> = None;
    for (index, &mu) in set.values().iter().enumerate() {
        let mut local = cfg.clone();
        if warm_start {
            if let Some(prev) = &last_solution {
                local.initial = InitialGuess::WarmStart(prev.clone());
            }
        }
        let outcome = newton_solve(p, mu, &local);
        if let Ok(result) = &outcome {
            if result.converged {
                last_solution = Some(result.x.clone());
            }
        }
        entries.push(SweepEntry { index, mu, outcome });
    }
    SweepReport {
        entries,
        warm_start,
    }
}
