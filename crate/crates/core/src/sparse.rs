//! Compressed sparse matrices with row and column views.
//!
//! The decoders walk parity-check rows (one check, its few variables) and
//! columns (one variable, its few checks) in inner loops, so the matrix keeps
//! both a row-major and a column-major index. Entries are strictly non-zero:
//! structural zeros are not representable, which keeps degree counts and
//! sparsity-based cost estimates honest.

use crate::error::{Error, Result};

/// Immutable sparse matrix storing non-zero entries in both row-major and
/// column-major order.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets.
    ///
    /// Rejects out-of-range indices, duplicate positions, zero values, and
    /// non-finite values. Triplet order does not matter.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) outside {rows}x{cols} matrix"
                )));
            }
            if v == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "explicit zero at ({i}, {j}); omit structural zeros"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite value {v} at ({i}, {j})")));
            }
            entries.push((i, j, v));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate entry at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }

        let mut row_ptr = vec![0usize; rows + 1];
        let mut row_cols = Vec::with_capacity(entries.len());
        let mut row_vals = Vec::with_capacity(entries.len());
        for &(i, j, v) in &entries {
            row_ptr[i + 1] += 1;
            row_cols.push(j);
            row_vals.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }

        entries.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; cols + 1];
        let mut col_rows = Vec::with_capacity(entries.len());
        let mut col_vals = Vec::with_capacity(entries.len());
        for &(i, j, v) in &entries {
            col_ptr[j + 1] += 1;
            col_rows.push(i);
            col_vals.push(v);
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }

        Ok(SparseMatrix { rows, cols, row_ptr, row_cols, row_vals, col_ptr, col_rows, col_vals })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of stored (non-zero) entries.
    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    /// Value at `(i, j)`, or `None` for a structural zero.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i >= self.rows || j >= self.cols {
            return None;
        }
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.row_cols[lo..hi].binary_search(&j) {
            Ok(k) => Some(self.row_vals[lo + k]),
            Err(_) => None,
        }
    }

    /// Entries of row `i` as `(col, value)`, in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.row_cols[lo..hi].iter().copied().zip(self.row_vals[lo..hi].iter().copied())
    }

    /// Entries of column `j` as `(row, value)`, in ascending row order.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.col_rows[lo..hi].iter().copied().zip(self.col_vals[lo..hi].iter().copied())
    }

    pub fn row_degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn col_degree(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    /// All entries as `(row, col, value)`, row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::InvalidArgument(format!(
                "matvec expects length {}, got {}",
                self.cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// `y = Aᵀ x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::InvalidArgument(format!(
                "transpose matvec expects length {}, got {}",
                self.rows,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.cols];
        for j in 0..self.cols {
            let mut acc = 0.0;
            for (i, v) in self.col(j) {
                acc += v * x[i];
            }
            y[j] = acc;
        }
        Ok(y)
    }

    /// The transposed matrix.
    pub fn transpose(&self) -> SparseMatrix {
        let triplets: Vec<(usize, usize, f64)> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        SparseMatrix::from_triplets(self.cols, self.rows, &triplets)
            .expect("transposing a valid matrix cannot fail")
    }

    /// Sparse product `A·B`; useful for small structural computations such as
    /// normal-equation forms. Cancellation to exact zero drops the entry.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidArgument(format!(
                "matmul dimension mismatch: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc: Vec<f64> = vec![0.0; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for (k, va) in self.row(i) {
                for (j, vb) in other.row(k) {
                    if acc[j] == 0.0 {
                        touched.push(j);
                    }
                    acc[j] += va * vb;
                }
            }
            for &j in &touched {
                if acc[j] != 0.0 {
                    triplets.push((i, j, acc[j]));
                }
                acc[j] = 0.0;
            }
        }
        SparseMatrix::from_triplets(self.rows, other.cols, &triplets)
    }
}
