//! Low-rank factor pairs `U * V^T` with truncation by orthogonalization plus
//! a small singular value decomposition.

use super::{DenseMatrix, LinalgError};
use nalgebra::linalg::SVD;

/// SVD with a tightened convergence threshold. nalgebra's default
/// `eps = f64::EPSILON` can stop a few orders of magnitude short of full
/// accuracy on nearly diagonal inputs; a smaller threshold fixes that, with
/// the default as fallback should the extra sweeps not converge.
pub(crate) fn accurate_svd(
    m: &DenseMatrix,
    compute_uv: bool,
) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    SVD::try_new(m.clone(), compute_uv, compute_uv, 1e-19, 100_000)
        .or_else(|| SVD::try_new(m.clone(), compute_uv, compute_uv, f64::EPSILON, 0))
        .expect("SVD converges with unbounded iterations at machine epsilon")
}

/// A matrix stored as `U * V^T` with explicit rank. `U` is `n_rows x r`,
/// `V` is `n_cols x r`. After [`truncate`](Self::truncate) the columns of `U`
/// are orthonormal and `V` carries the singular-value scaling.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    u: DenseMatrix,
    v: DenseMatrix,
}

impl LowRankFactors {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self, LinalgError> {
        if u.ncols() != v.ncols() {
            return Err(LinalgError::DimensionMismatch {
                context: "factor rank (column counts of U and V)",
                expected: u.ncols(),
                got: v.ncols(),
            });
        }
        Ok(Self { u, v })
    }

    /// The rank-0 representation of the `n_rows x n_cols` zero matrix.
    pub fn zero(n_rows: usize, n_cols: usize) -> Self {
        Self {
            u: DenseMatrix::zeros(n_rows, 0),
            v: DenseMatrix::zeros(n_cols, 0),
        }
    }

    /// Rank-1 factors from an outer product `u * v^T`.
    pub fn from_outer(u: &[f64], v: &[f64]) -> Self {
        Self {
            u: DenseMatrix::from_column_slice(u.len(), 1, u),
            v: DenseMatrix::from_column_slice(v.len(), 1, v),
        }
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.v.nrows()
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    /// Column `j` of the represented matrix, materialized.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        for r in 0..self.rank() {
            let w = self.v[(j, r)];
            if w != 0.0 {
                for i in 0..self.n_rows() {
                    out[i] += self.u[(i, r)] * w;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        &self.u * self.v.transpose()
    }

    /// Sum of two factor pairs by concatenation; the rank adds.
    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.n_rows() != other.n_rows() {
            return Err(LinalgError::DimensionMismatch {
                context: "factor addition row count",
                expected: self.n_rows(),
                got: other.n_rows(),
            });
        }
        if self.n_cols() != other.n_cols() {
            return Err(LinalgError::DimensionMismatch {
                context: "factor addition column count",
                expected: self.n_cols(),
                got: other.n_cols(),
            });
        }
        let mut u = DenseMatrix::zeros(self.n_rows(), self.rank() + other.rank());
        u.columns_mut(0, self.rank()).copy_from(&self.u);
        u.columns_mut(self.rank(), other.rank()).copy_from(&other.u);
        let mut v = DenseMatrix::zeros(self.n_cols(), self.rank() + other.rank());
        v.columns_mut(0, self.rank()).copy_from(&self.v);
        v.columns_mut(self.rank(), other.rank()).copy_from(&other.v);
        Ok(Self { u, v })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            u: &self.u * alpha,
            v: self.v.clone(),
        }
    }

    /// Frobenius norm of the represented matrix via the factor Gramians.
    pub fn frob_norm(&self) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let gu = self.u.transpose() * &self.u;
        let gv = self.v.transpose() * &self.v;
        let sq: f64 = gu.iter().zip(gv.iter()).map(|(a, b)| a * b).sum();
        sq.max(0.0).sqrt()
    }

    /// Recompress to rank `min(max_rank, numerical rank at relative tolerance
    /// tol)` via thin QR of both factors and an SVD of the small core matrix.
    /// Singular values below the roundoff floor of the factored
    /// representation count as zero, so exact cancellations collapse to rank
    /// 0 at any reasonable tolerance.
    pub fn truncate(&self, max_rank: usize, tol: f64) -> Self {
        if self.rank() == 0 {
            return self.clone();
        }
        let qr_u = self.u.clone().qr();
        let qr_v = self.v.clone().qr();
        let r_u = qr_u.r();
        let r_v = qr_v.r();
        let noise_floor =
            (4.0 + self.rank() as f64) * f64::EPSILON * r_u.norm() * r_v.norm();
        let core = r_u * r_v.transpose();
        let svd = accurate_svd(&core, true);
        let sigma = &svd.singular_values;
        let sigma_max = sigma.max();
        if !(sigma_max > noise_floor) {
            return Self::zero(self.n_rows(), self.n_cols());
        }
        let cutoff = (tol * sigma_max).max(noise_floor);
        let numerical_rank = sigma.iter().filter(|&&s| s > cutoff).count();
        let r = numerical_rank.min(max_rank);
        if r == 0 {
            return Self::zero(self.n_rows(), self.n_cols());
        }
        let w = svd.u.as_ref().expect("left vectors requested");
        let zt = svd.v_t.as_ref().expect("right vectors requested");
        let u = qr_u.q() * w.columns(0, r);
        let mut v = qr_v.q() * zt.rows(0, r).transpose();
        for (j, mut col) in v.column_iter_mut().enumerate() {
            col *= sigma[j];
        }
        Self { u, v }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_factors(n: usize, m: usize, r: usize, seed: u64) -> LowRankFactors {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u = DenseMatrix::from_fn(n, r, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let v = DenseMatrix::from_fn(m, r, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        LowRankFactors::new(u, v).unwrap()
    }

    fn frob(a: &DenseMatrix) -> f64 {
        a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn rank_one_roundtrip_without_truncation() {
        let x = LowRankFactors::from_outer(&[1.0, -2.0, 0.5], &[3.0, 4.0]);
        let t = x.truncate(5, 0.0);
        assert_eq!(t.rank(), 1);
        assert!(frob(&(t.to_dense() - x.to_dense())) <= 1e-14 * frob(&x.to_dense()));
    }

    #[test]
    fn proportional_columns_collapse_to_rank_one() {
        let u = DenseMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let v = DenseMatrix::from_column_slice(2, 2, &[1.0, -1.0, 0.5, -0.5]);
        let x = LowRankFactors::new(u, v).unwrap();
        let t = x.truncate(2, 1e-12);
        assert_eq!(t.rank(), 1);
        assert!(frob(&(t.to_dense() - x.to_dense())) <= 1e-12 * frob(&x.to_dense()));
    }

    #[test]
    fn truncation_error_matches_tail_singular_values() {
        let x = random_factors(12, 9, 6, 21);
        let dense = x.to_dense();
        let svd = SVD::try_new(dense.clone(), false, false, f64::EPSILON, 0).unwrap();
        let sigma = svd.singular_values;
        let t = x.truncate(3, 0.0);
        assert_eq!(t.rank(), 3);
        let err = frob(&(t.to_dense() - dense));
        let tail = (sigma[3] * sigma[3] + sigma[4] * sigma[4] + sigma[5] * sigma[5]).sqrt();
        assert!((err - tail).abs() <= 1e-10, "err {err} vs tail {tail}");
    }

    #[test]
    fn truncation_error_matches_tail_at_full_size() {
        let x = random_factors(50, 50, 12, 2);
        let dense = x.to_dense();
        let svd = SVD::try_new(dense.clone(), false, false, f64::EPSILON, 0).unwrap();
        let sigma = svd.singular_values;
        let t = x.truncate(5, 0.0);
        assert_eq!(t.rank(), 5);
        let err = frob(&(t.to_dense() - dense));
        let tail: f64 = sigma.iter().skip(5).map(|s| s * s).sum::<f64>().sqrt();
        assert!(
            (err - tail).abs() <= 1e-10 * sigma[0],
            "err {err} vs tail {tail}"
        );
    }

    #[test]
    fn truncated_u_is_orthonormal() {
        let x = random_factors(15, 8, 5, 4);
        let t = x.truncate(4, 0.0);
        let gram = t.u().transpose() * t.u();
        let eye = DenseMatrix::identity(4, 4);
        assert!(frob(&(gram - eye)) <= 1e-12);
    }

    #[test]
    fn add_then_cancel_truncates_to_rank_zero() {
        let x = random_factors(6, 5, 2, 9);
        let sum = x.add(&x.scaled(-1.0)).unwrap();
        assert_eq!(sum.rank(), 4);
        let t = sum.truncate(4, 1e-12);
        assert_eq!(t.rank(), 0);
    }

    #[test]
    fn add_ranks_sum() {
        let x = random_factors(6, 5, 1, 1);
        let y = random_factors(6, 5, 1, 2);
        let sum = x.add(&y).unwrap();
        assert_eq!(sum.rank(), 2);
        let err = frob(&(sum.to_dense() - (x.to_dense() + y.to_dense())));
        assert!(err <= 1e-13);
    }

    #[test]
    fn add_dimension_mismatch() {
        let x = random_factors(6, 5, 1, 1);
        let y = random_factors(7, 5, 1, 2);
        assert!(matches!(
            x.add(&y),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_rank_truncate_is_identity() {
        let z = LowRankFactors::zero(4, 3);
        let t = z.truncate(5, 1e-12);
        assert_eq!(t.rank(), 0);
        assert_eq!(t.n_rows(), 4);
        assert_eq!(t.n_cols(), 3);
    }

    #[test]
    fn frob_norm_matches_dense() {
        let x = random_factors(10, 7, 3, 33);
        assert!((x.frob_norm() - frob(&x.to_dense())).abs() <= 1e-12 * x.frob_norm());
    }

    #[test]
    fn column_matches_dense_column() {
        let x = random_factors(8, 6, 3, 5);
        let dense = x.to_dense();
        for j in 0..6 {
            let col = x.column(j);
            for i in 0..8 {
                assert!((col[i] - dense[(i, j)]).abs() <= 1e-14);
            }
        }
    }

    proptest! {
        // truncate is idempotent at fixed (rank, tol)
        #[test]
        fn truncate_idempotent(seed in 0u64..30, r in 1usize..6, max_rank in 1usize..6) {
            let x = random_factors(10, 8, r, seed);
            let once = x.truncate(max_rank, 1e-10);
            let twice = once.truncate(max_rank, 1e-10);
            let scale = x.frob_norm().max(1.0);
            prop_assert!(frob(&(once.to_dense() - twice.to_dense())) <= 1e-13 * scale);
        }

        // truncation error obeys the SVD tail bound
        #[test]
        fn truncate_error_bounded_by_tail(seed in 0u64..30, max_rank in 1usize..7) {
            let x = random_factors(9, 7, 5, seed);
            let dense = x.to_dense();
            let svd = SVD::try_new(dense.clone(), false, false, f64::EPSILON, 0).unwrap();
            let sigma = svd.singular_values;
            let t = x.truncate(max_rank, 0.0);
            let err = frob(&(t.to_dense() - dense));
            let r = max_rank.min(sigma.len());
            let tail: f64 = sigma.iter().skip(r).map(|s| s * s).sum::<f64>().sqrt();
            prop_assert!(err <= tail + 1e-10 * sigma[0].max(1.0));
        }
    }
}
