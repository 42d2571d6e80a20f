//! Direct factorization of sparse matrices for repeated solves.
//!
//! The factorization is an LU decomposition with partial pivoting carried out
//! in band storage. The bandwidths are taken from the sparsity pattern, so a
//! tridiagonal system factors in O(n) while a fully dense pattern degrades to
//! ordinary dense LU. Partial pivoting can widen the upper band by at most the
//! lower bandwidth, which the storage accounts for up front.

use super::{DenseMatrix, LinalgError, SparseMatrix};

/// LU factors of a square sparse matrix. Read-only after construction; solves
/// may run concurrently from multiple threads.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage with `2*kl + ku + 1` rows per column.
    /// Entry (i, j) lives at `ab[j * ldab + ku + i - j]`.
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl Factorization {
    /// Factor `a` with partial pivoting.
    pub fn new(a: &SparseMatrix) -> Result<Self, LinalgError> {
        if a.n_rows() != a.n_cols() {
            return Err(LinalgError::NotSquare {
                n_rows: a.n_rows(),
                n_cols: a.n_cols(),
            });
        }
        let n = a.n_rows();
        let (kl, raw_ku) = a.bandwidths();
        let ku = (raw_ku + kl).min(n.saturating_sub(1));
        let ldab = kl + ku + 1;
        let mut ab = vec![0.0; n * ldab];
        let offsets = a.row_offsets();
        let cols = a.col_indices();
        let vals = a.values();
        for i in 0..n {
            for idx in offsets[i]..offsets[i + 1] {
                let j = cols[idx];
                ab[j * ldab + (ku + i) - j] = vals[idx];
            }
        }
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut pivot = k;
            let mut pivot_abs = ab[k * ldab + ku].abs();
            for i in (k + 1)..=last_row {
                let cand = ab[k * ldab + (ku + i) - k].abs();
                if cand > pivot_abs {
                    pivot = i;
                    pivot_abs = cand;
                }
            }
            if pivot_abs == 0.0 {
                return Err(LinalgError::SingularMatrix { pivot: k });
            }
            pivots[k] = pivot;
            let last_col = (k + ku).min(n - 1);
            if pivot != k {
                for j in k..=last_col {
                    let a_kj = j * ldab + (ku + k) - j;
                    let a_pj = j * ldab + (ku + pivot) - j;
                    ab.swap(a_kj, a_pj);
                }
            }
            let diag = ab[k * ldab + ku];
            for i in (k + 1)..=last_row {
                let m_idx = k * ldab + (ku + i) - k;
                let m = ab[m_idx] / diag;
                ab[m_idx] = m;
                if m != 0.0 {
                    for j in (k + 1)..=last_col {
                        let a_ij = j * ldab + (ku + i) - j;
                        let a_kj = j * ldab + (ku + k) - j;
                        ab[a_ij] -= m * ab[a_kj];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            ab,
            pivots,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                context: "solve right-hand side length",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Column-wise solve `A X = B`.
    pub fn solve_multi(&self, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if b.nrows() != self.n {
            return Err(LinalgError::DimensionMismatch {
                context: "solve_multi row count",
                expected: self.n,
                got: b.nrows(),
            });
        }
        let mut out = b.clone();
        for mut col in out.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
        Ok(out)
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let ldab = kl + ku + 1;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                let last_row = (k + kl).min(n - 1);
                for i in (k + 1)..=last_row {
                    x[i] -= self.ab[k * ldab + (ku + i) - k] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + ku).min(n - 1);
            let mut acc = x[k];
            for j in (k + 1)..=last_col {
                acc -= self.ab[j * ldab + (ku + k) - j] * x[j];
            }
            x[k] = acc / self.ab[k * ldab + ku];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};

    fn laplacian_1d(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let f = Factorization::new(&a).unwrap();
        let x = f.solve(&[2.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn laplacian_matches_dense_elimination_oracle() {
        let a = laplacian_1d(4);
        let f = Factorization::new(&a).unwrap();
        let b = vec![1.0, 0.0, -2.0, 3.0];
        let x = f.solve(&b).unwrap();
        let dense = a.to_dense();
        let x_ref = dense
            .lu()
            .solve(&DVector::from_column_slice(&b))
            .expect("oracle solve");
        for i in 0..4 {
            assert!((x[i] - x_ref[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_row_is_singular() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (2, 2, 1.0)]).unwrap();
        match Factorization::new(&a) {
            Err(LinalgError::SingularMatrix { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn not_square_rejected() {
        let a = SparseMatrix::zeros(2, 3);
        assert!(matches!(
            Factorization::new(&a),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap at the first pivot
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let f = Factorization::new(&a).unwrap();
        let x = f.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 5.0).abs() <= 1e-14);
        assert!((x[1] - 3.0).abs() <= 1e-14);
    }

    #[test]
    fn solve_multi_matches_loop_of_solves() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut t = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    t.push((i, j, 4.0 + rng.random::<f64>()));
                } else if rng.random::<f64>() < 0.4 {
                    t.push((i, j, rng.random::<f64>() - 0.5));
                }
            }
        }
        let a = SparseMatrix::from_triplets(6, 6, &t).unwrap();
        let f = Factorization::new(&a).unwrap();
        let b = DenseMatrix::from_fn(6, 3, |i, j| ((i + 2 * j) as f64).sin());
        let x = f.solve_multi(&b).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = b.column(j).iter().copied().collect();
            let x_col = f.solve(&col).unwrap();
            for i in 0..6 {
                assert_eq!(x[(i, j)], x_col[i]);
            }
        }
    }

    #[test]
    fn solve_multi_identity_recovers_inverse_of_diag() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let f = Factorization::new(&a).unwrap();
        let inv = f.solve_multi(&DenseMatrix::identity(2, 2)).unwrap();
        assert_eq!(inv[(0, 0)], 0.5);
        assert_eq!(inv[(1, 1)], 0.25);
        assert_eq!(inv[(0, 1)], 0.0);
        assert_eq!(inv[(1, 0)], 0.0);
    }

    #[test]
    fn random_well_conditioned_residual_contract() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let n = 5 + (trial % 20);
            let mut t = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        t.push((i, j, n as f64 + rng.random::<f64>()));
                    } else if rng.random::<f64>() < 0.3 {
                        t.push((i, j, rng.random::<f64>() * 2.0 - 1.0));
                    }
                }
            }
            let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
            let f = Factorization::new(&a).unwrap();
            let x = f.solve(&b).unwrap();
            let r = a.spmv(&x).unwrap();
            let num: f64 = r
                .iter()
                .zip(&b)
                .map(|(ri, bi)| (ri - bi) * (ri - bi))
                .sum::<f64>()
                .sqrt();
            let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num <= 1e-10 * den, "trial {trial}: {num} vs {den}");
        }
    }
}
