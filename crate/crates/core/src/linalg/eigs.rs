//! Eigenvalue computation: dense Schur for small matrices, Arnoldi for the
//! rest.

use super::{DenseMatrix, LinalgError};
use nalgebra::linalg::Schur;
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest dimension handled by the dense eigensolver; beyond this, spectrum
/// estimation falls back to a Krylov method.
pub const DENSE_EIG_THRESHOLD: usize = 2000;

/// All eigenvalues of a square real matrix, unordered, via the real Schur
/// form.
///
/// The QR iteration can cycle at machine-epsilon deflation on matrices with
/// large eigenvalue clusters (preconditioned systems are full of those), so
/// failed attempts retry with a progressively looser deflation threshold.
/// The loosest retry still keeps the backward error orders of magnitude
/// below the 1e-8 * |A| contract.
pub fn dense_eigs(a: &DenseMatrix) -> Result<Vec<Complex<f64>>, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            n_rows: a.nrows(),
            n_cols: a.ncols(),
        });
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let max_iter = 200 * a.nrows().max(10);
    for eps in [f64::EPSILON, 1e-14, 1e-12, 1e-10] {
        if let Some(schur) = Schur::try_new(a.clone(), eps, max_iter) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(LinalgError::EigsNoConvergence { max_iter })
}

/// Ritz values of a linear operator from an Arnoldi process with at most
/// `krylov_dim` basis vectors. The start vector is drawn from a deterministic
/// generator seeded with `seed`; a degenerate draw falls back to all ones.
pub fn arnoldi_eigs<F>(
    op: F,
    n: usize,
    krylov_dim: usize,
    seed: u64,
) -> Result<Vec<Complex<f64>>, LinalgError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, LinalgError>,
{
    let m = krylov_dim.min(n);
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let norm0 = norm(&v0);
    if norm0 < f64::MIN_POSITIVE {
        v0 = vec![1.0; n];
    }
    let norm0 = norm(&v0);
    for x in &mut v0 {
        *x /= norm0;
    }

    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut h = DenseMatrix::zeros(m + 1, m);
    let mut dim = m;
    for j in 0..m {
        let mut w = op(&basis[j])?;
        if w.len() != n {
            return Err(LinalgError::DimensionMismatch {
                context: "arnoldi operator output length",
                expected: n,
                got: w.len(),
            });
        }
        // modified Gram-Schmidt with one reorthogonalization pass
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let proj = dot(q, &w);
                h[(i, j)] += proj;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= proj * qk;
                }
            }
        }
        let beta = norm(&w);
        h[(j + 1, j)] = beta;
        let h_scale = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if beta <= 1e-13 * h_scale.max(f64::MIN_POSITIVE) {
            // invariant subspace found
            dim = j + 1;
            break;
        }
        for x in &mut w {
            *x /= beta;
        }
        basis.push(w);
    }
    let h_square = h.view((0, 0), (dim, dim)).into_owned();
    dense_eigs(&h_square)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
