//! Compressed sparse row matrices.

use super::{DenseMatrix, LinalgError};

/// Sparse matrix in canonical CSR form: within each row the column indices
/// are strictly increasing and duplicates have been merged.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets. Duplicate entries are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(LinalgError::TripletOutOfBounds {
                    row: i,
                    col: j,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut idx = 0;
        for row in 0..n_rows {
            while idx < sorted.len() && sorted[idx].0 == row {
                let col = sorted[idx].1;
                let mut val = sorted[idx].2;
                idx += 1;
                while idx < sorted.len() && sorted[idx].0 == row && sorted[idx].1 == col {
                    val += sorted[idx].2;
                    idx += 1;
                }
                col_indices.push(col);
                values.push(val);
            }
            row_offsets[row + 1] = col_indices.len();
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entry at (i, j), or 0.0 if outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.col_indices[lo..hi].binary_search(&j) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    /// Matrix-vector product `A * x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                context: "spmv vector length",
                expected: self.n_cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for idx in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[idx] * x[self.col_indices[idx]];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// `A * B` with a dense right factor, column by column.
    pub fn mul_dense(&self, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if b.nrows() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                context: "mul_dense row count",
                expected: self.n_cols,
                got: b.nrows(),
            });
        }
        let mut out = DenseMatrix::zeros(self.n_rows, b.ncols());
        for j in 0..b.ncols() {
            let col = b.column(j);
            for i in 0..self.n_rows {
                let mut acc = 0.0;
                for idx in self.row_offsets[i]..self.row_offsets[i + 1] {
                    acc += self.values[idx] * col[self.col_indices[idx]];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out
    }

    /// Sum of scaled matrices sharing one shape: `sum_k coeff_k * A_k`.
    /// The result pattern is the union of the input patterns.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<Self, LinalgError> {
        let (n_rows, n_cols) = match terms.first() {
            Some((_, a)) => (a.n_rows, a.n_cols),
            None => return Ok(Self::zeros(0, 0)),
        };
        for (_, a) in terms {
            if a.n_rows != n_rows || a.n_cols != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    context: "linear_combination shape",
                    expected: n_rows,
                    got: a.n_rows,
                });
            }
        }
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut cursors = vec![0usize; terms.len()];
        for row in 0..n_rows {
            for (t, (_, a)) in terms.iter().enumerate() {
                cursors[t] = a.row_offsets[row];
            }
            loop {
                let mut next_col = usize::MAX;
                for (t, (_, a)) in terms.iter().enumerate() {
                    if cursors[t] < a.row_offsets[row + 1] {
                        next_col = next_col.min(a.col_indices[cursors[t]]);
                    }
                }
                if next_col == usize::MAX {
                    break;
                }
                let mut acc = 0.0;
                for (t, (coeff, a)) in terms.iter().enumerate() {
                    if cursors[t] < a.row_offsets[row + 1]
                        && a.col_indices[cursors[t]] == next_col
                    {
                        acc += coeff * a.values[cursors[t]];
                        cursors[t] += 1;
                    }
                }
                col_indices.push(next_col);
                values.push(acc);
            }
            row_offsets[row + 1] = col_indices.len();
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Lower and upper bandwidth of the stored pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0usize;
        let mut ku = 0usize;
        for i in 0..self.n_rows {
            for idx in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[idx];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for idx in self.row_offsets[i]..self.row_offsets[i + 1] {
                out[(i, self.col_indices[idx])] = self.values[idx];
            }
        }
        out
    }
}
