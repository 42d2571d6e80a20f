//! The parametric nonlinear problem: residual `g(x, mu)`, its affine Jacobian
//! pieces `A0` and `A1`, the state-dependent convection Jacobian and the
//! reference 1D fluid-structure model.
//!
//! The residual has the fixed algebraic shape
//!
//! ```text
//! g(x, mu) = A0 x + (mu - mu_ref) A1 x + rho_f N(x) - b_D
//! ```
//!
//! where `N` is a purely quadratic convection term. Everything linear that
//! falls out of Dirichlet elimination lives in `A0`, so `b_D` carries no
//! parameter dependence and `N(alpha x)`'s Jacobian scales linearly in `x`.

use crate::linalg::{LinalgError, SparseMatrix};
use std::ops::Range;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ProblemError {
    #[error("state vector has length {got}, problem has {expected} unknowns")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state vector contains a non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("model config invalid: {reason}")]
    InvalidConfig { reason: String },
    #[error("elastic constants degenerate: lambda_s + mu_s must be positive (got {sum})")]
    DegenerateElasticConstants { sum: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The quadratic nonlinearity of a concrete model: its value and Jacobian at
/// a state. Implementations must be exactly quadratic, so `jacobian` is
/// linear in `x` and `eval(0) = 0`.
pub trait ConvectionTerm: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> SparseMatrix;
}

/// No convection at all; used by purely linear test problems.
#[derive(Debug, Clone)]
pub struct ZeroConvection {
    pub dim: usize,
}

impl ConvectionTerm for ZeroConvection {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn jacobian(&self, _x: &[f64]) -> SparseMatrix {
        SparseMatrix::zeros(self.dim, self.dim)
    }
}

/// Central-difference convection `v * v'` on the fluid block of the 1D model.
/// Row `r` (fluid interior node `r + 1`) evaluates
/// `x_r * (x_{r+1} - x_{r-1}) / (2 h)` with eliminated boundary neighbors
/// treated as zero; the interface unknown is an ordinary right neighbor of
/// the last fluid row.
#[derive(Debug, Clone)]
pub struct CentralConvection1d {
    dim: usize,
    fluid_rows: usize,
    inv_two_h: f64,
}

impl CentralConvection1d {
    pub fn new(dim: usize, fluid_rows: usize, h: f64) -> Self {
        Self {
            dim,
            fluid_rows,
            inv_two_h: 0.5 / h,
        }
    }

    fn neighbors(&self, r: usize, x: &[f64]) -> (f64, f64) {
        let left = if r == 0 { 0.0 } else { x[r - 1] };
        let right = if r + 1 < self.dim { x[r + 1] } else { 0.0 };
        (left, right)
    }
}

impl ConvectionTerm for CentralConvection1d {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for r in 0..self.fluid_rows {
            let (left, right) = self.neighbors(r, x);
            out[r] = x[r] * (right - left) * self.inv_two_h;
        }
        out
    }

    fn jacobian(&self, x: &[f64]) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(3 * self.fluid_rows);
        for r in 0..self.fluid_rows {
            let (left, right) = self.neighbors(r, x);
            triplets.push((r, r, (right - left) * self.inv_two_h));
            if r > 0 {
                triplets.push((r, r - 1, -x[r] * self.inv_two_h));
            }
            if r + 1 < self.dim {
                triplets.push((r, r + 1, x[r] * self.inv_two_h));
            }
        }
        SparseMatrix::from_triplets(self.dim, self.dim, &triplets)
            .expect("convection stencil indices are in range")
    }
}

/// Which discrete model a [`ModelConfig`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    BurgersFsi1d,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "burgers-fsi-1d" => Ok(Self::BurgersFsi1d),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

/// How the shear-modulus set is described.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterSpec {
    Interval { min: f64, max: f64, count: usize },
    List(Vec<f64>),
}

/// Everything needed to assemble a model instance and its parameter set.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub n_fluid: usize,
    pub n_solid: usize,
    pub v_in: f64,
    pub rho_f: f64,
    pub nu_f: f64,
    pub lambda_s: f64,
    pub parameters: ParameterSpec,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::BurgersFsi1d,
            n_fluid: 200,
            n_solid: 200,
            v_in: 1.0,
            rho_f: 12.5,
            nu_f: 0.04,
            lambda_s: 200_000.0,
            parameters: ParameterSpec::Interval {
                min: 20_000.0,
                max: 60_000.0,
                count: 200,
            },
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.n_fluid < 2 || self.n_solid < 2 {
            return Err(ProblemError::InvalidConfig {
                reason: format!(
                    "need at least 2 cells per subdomain (got n_fluid={}, n_solid={})",
                    self.n_fluid, self.n_solid
                ),
            });
        }
        match &self.parameters {
            ParameterSpec::Interval { min, max, count } => {
                if !(max > min) || *count < 1 {
                    return Err(ProblemError::InvalidConfig {
                        reason: format!(
                            "parameter interval degenerate (min={min}, max={max}, count={count})"
                        ),
                    });
                }
            }
            ParameterSpec::List(values) => {
                if values.is_empty() {
                    return Err(ProblemError::InvalidConfig {
                        reason: "explicit parameter list is empty".to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn parameter_set(&self) -> Result<crate::partition::ParameterSet, ProblemError> {
        self.validate()?;
        let set = match &self.parameters {
            ParameterSpec::Interval { min, max, count } => {
                if *count == 1 {
                    crate::partition::ParameterSet::new(vec![*min])
                } else {
                    crate::partition::ParameterSet::uniform(*min, *max, *count)
                }
            }
            ParameterSpec::List(values) => crate::partition::ParameterSet::new(values.clone()),
        };
        set.map_err(|e| ProblemError::InvalidConfig {
            reason: e.to_string(),
        })
    }
}

/// A parameter-dependent nonlinear problem `g(x, mu) = 0`.
pub struct ParametricProblem {
    a0: SparseMatrix,
    a1: SparseMatrix,
    rho_f: f64,
    nu_f: f64,
    lambda_s: f64,
    mu_ref: f64,
    b_d: Vec<f64>,
    conv: Arc<dyn ConvectionTerm>,
    fluid_dofs: Range<usize>,
}

impl ParametricProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a0: SparseMatrix,
        a1: SparseMatrix,
        rho_f: f64,
        nu_f: f64,
        lambda_s: f64,
        mu_ref: f64,
        b_d: Vec<f64>,
        conv: Arc<dyn ConvectionTerm>,
        fluid_dofs: Range<usize>,
    ) -> Result<Self, ProblemError> {
        let n = a0.n_rows();
        if a0.n_cols() != n || a1.n_rows() != n || a1.n_cols() != n {
            return Err(ProblemError::DimensionMismatch {
                expected: n,
                got: a1.n_rows(),
            });
        }
        if b_d.len() != n || conv.dim() != n {
            return Err(ProblemError::DimensionMismatch {
                expected: n,
                got: b_d.len(),
            });
        }
        Ok(Self {
            a0,
            a1,
            rho_f,
            nu_f,
            lambda_s,
            mu_ref,
            b_d,
            conv,
            fluid_dofs,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.a0.n_rows()
    }

    pub fn a0(&self) -> &SparseMatrix {
        &self.a0
    }

    pub fn a1(&self) -> &SparseMatrix {
        &self.a1
    }

    pub fn rho_f(&self) -> f64 {
        self.rho_f
    }

    pub fn nu_f(&self) -> f64 {
        self.nu_f
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    pub fn mu_ref(&self) -> f64 {
        self.mu_ref
    }

    pub fn b_d(&self) -> &[f64] {
        &self.b_d
    }

    /// Index range of the fluid velocities (interface unknown included).
    pub fn fluid_dofs(&self) -> Range<usize> {
        self.fluid_dofs.clone()
    }

    fn check_state(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() != self.n_dof() {
            return Err(ProblemError::DimensionMismatch {
                expected: self.n_dof(),
                got: x.len(),
            });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite { index });
        }
        Ok(())
    }

    /// `g(x, mu) = A0 x + (mu - mu_ref) A1 x + rho_f N(x) - b_D`.
    pub fn residual(&self, x: &[f64], mu: f64) -> Result<Vec<f64>, ProblemError> {
        self.check_state(x)?;
        let a0x = self.a0.spmv(x)?;
        let a1x = self.a1.spmv(x)?;
        let nx = self.conv.eval(x);
        let shift = mu - self.mu_ref;
        Ok((0..self.n_dof())
            .map(|i| a0x[i] + shift * a1x[i] + self.rho_f * nx[i] - self.b_d[i])
            .collect())
    }

    /// `A0 + (mu - mu_ref) A1 + rho_f A_conv(x)`.
    pub fn jacobian(&self, x: &[f64], mu: f64) -> Result<SparseMatrix, ProblemError> {
        self.check_state(x)?;
        let a_conv = self.conv.jacobian(x);
        Ok(self.system_matrix(&a_conv, mu - self.mu_ref)?)
    }

    /// Jacobian of the quadratic convection term at `x`.
    pub fn assemble_conv(&self, x: &[f64]) -> Result<SparseMatrix, ProblemError> {
        self.check_state(x)?;
        Ok(self.conv.jacobian(x))
    }

    /// `A0 + shift * A1 + rho_f * a_conv` for a frozen convection Jacobian.
    pub fn system_matrix(
        &self,
        a_conv: &SparseMatrix,
        shift: f64,
    ) -> Result<SparseMatrix, LinalgError> {
        SparseMatrix::linear_combination(&[
            (1.0, &self.a0),
            (shift, &self.a1),
            (self.rho_f, a_conv),
        ])
    }

    /// The same problem with `A0`, `A1`, `N` and `b_D` all scaled by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            a0: self.a0.scaled(alpha),
            a1: self.a1.scaled(alpha),
            rho_f: self.rho_f * alpha,
            nu_f: self.nu_f,
            lambda_s: self.lambda_s,
            mu_ref: self.mu_ref,
            b_d: self.b_d.iter().map(|v| v * alpha).collect(),
            conv: Arc::clone(&self.conv),
            fluid_dofs: self.fluid_dofs.clone(),
        }
    }
}

/// Poisson ratio `lambda / (2 (lambda + mu))`.
pub fn poisson_ratio(lambda_s: f64, mu_s: f64) -> Result<f64, ProblemError> {
    let sum = lambda_s + mu_s;
    if !(sum > 0.0) {
        return Err(ProblemError::DegenerateElasticConstants { sum });
    }
    Ok(lambda_s / (2.0 * sum))
}

/// Assemble the 1D coupled model on uniform grids.
///
/// Fluid on (0,1): `rho_f (-nu_f v'' + v v') = 0` with `v(0) = v_in`
/// eliminated into `b_D`. Solid on (1,2): `-mu_s u'' = 0` with `u(2) = 0`.
/// One shared interface unknown `w = v(1) = u(1)` closed by the discrete flux
/// balance `rho_f nu_f (w - v_last)/h_f + mu_s (w - u_first)/h_s = 0`.
///
/// Unknown ordering: `[v_1 .. v_{nf-1}, w, u_1 .. u_{ns-1}]`, so
/// `N = n_fluid + n_solid - 1`. `A0` holds the fluid diffusion, the linear
/// remainder of the eliminated convection neighbor and the fluid half of the
/// interface row; `A1` holds the solid stiffness and the solid half of the
/// interface row (assembled at `mu_ref = 0`, so shifts equal raw moduli).
pub fn build_burgers_fsi_1d(cfg: &ModelConfig) -> Result<ParametricProblem, ProblemError> {
    cfg.validate()?;
    let nf = cfg.n_fluid;
    let ns = cfg.n_solid;
    let hf = 1.0 / nf as f64;
    let hs = 1.0 / ns as f64;
    let n = (nf - 1) + 1 + (ns - 1);
    let iface = nf - 1;
    let rho_nu = cfg.rho_f * cfg.nu_f;

    let mut a0 = Vec::new();
    let mut a1 = Vec::new();
    let mut b_d = vec![0.0; n];

    // fluid interior rows: row r is node r+1
    let diff = rho_nu / (hf * hf);
    for r in 0..nf - 1 {
        a0.push((r, r, 2.0 * diff));
        if r > 0 {
            a0.push((r, r - 1, -diff));
        } else {
            // eliminated inflow neighbor: diffusion load and the linear part
            // of the convection product v_1 * (v_2 - v_in)
            b_d[r] += diff * cfg.v_in;
            a0.push((r, r, -cfg.rho_f * cfg.v_in / (2.0 * hf)));
        }
        a0.push((r, r + 1, -diff));
    }

    // interface flux balance
    a0.push((iface, iface, rho_nu / hf));
    a0.push((iface, iface - 1, -rho_nu / hf));
    a1.push((iface, iface, 1.0 / hs));
    a1.push((iface, iface + 1, -1.0 / hs));

    // solid interior rows: row iface + j is node j on (1,2)
    let stiff = 1.0 / (hs * hs);
    for j in 1..ns {
        let r = iface + j;
        a1.push((r, r, 2.0 * stiff));
        a1.push((r, r - 1, -stiff));
        if j + 1 < ns {
            a1.push((r, r + 1, -stiff));
        }
    }

    let a0 = SparseMatrix::from_triplets(n, n, &a0)?;
    let a1 = SparseMatrix::from_triplets(n, n, &a1)?;
    let conv = Arc::new(CentralConvection1d::new(n, nf - 1, hf));
    ParametricProblem::new(
        a0,
        a1,
        cfg.rho_f,
        cfg.nu_f,
        cfg.lambda_s,
        0.0,
        b_d,
        conv,
        0..nf,
    )
}
