//! Dense matrices and LU factorization.
//!
//! Lattice construction needs determinants of matrices up to a thousand rows
//! for volume normalization, and those determinants overflow or underflow
//! f64 long before the matrices become ill-conditioned. The factorization
//! therefore accumulates the determinant as a log-magnitude plus sign instead
//! of a raw product of pivots.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidArgument("dense matrix must be non-empty".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows in dense matrix".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Ok(DenseMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_sparse(m: &SparseMatrix) -> Self {
        let mut out = DenseMatrix::zeros(m.rows(), m.cols());
        for (i, j, v) in m.iter() {
            out.set(i, j, v);
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

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
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        Ok(y)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidArgument(format!(
                "matmul dimension mismatch: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// LU factorization with partial pivoting. Fails on non-square input or
    /// a (numerically) singular matrix.
    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    /// Solves `A x = b` through a fresh factorization.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.lu()?.solve(b)
    }

    /// Matrix inverse through LU.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            let col = lu.solve(&e)?;
            for i in 0..n {
                out.set(i, j, col[i]);
            }
        }
        Ok(out)
    }

    /// Natural log of `|det A|` with the determinant's sign.
    pub fn log_abs_det(&self) -> Result<(f64, i8)> {
        let lu = self.lu()?;
        Ok((lu.log_abs_det, lu.det_sign))
    }
}

/// LU factors of a square matrix, with the determinant tracked in log space.
pub struct Lu {
    n: usize,
    /// Combined unit-lower and upper factors, row-major.
    factors: Vec<f64>,
    /// Row permutation applied to the input.
    perm: Vec<usize>,
    pub log_abs_det: f64,
    pub det_sign: i8,
}

impl Lu {
    fn factor(a: &DenseMatrix) -> Result<Lu> {
        if a.rows != a.cols {
            return Err(Error::InvalidArgument(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut f = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign: i8 = 1;
        let mut log_det = 0.0;
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = if scale > 0.0 { scale * 1e-13 * n as f64 } else { 0.0 };

        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_mag = f[k * n + k].abs();
            for i in (k + 1)..n {
                let mag = f[i * n + k].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = i;
                }
            }
            if pivot_mag <= tiny {
                return Err(Error::Singular(format!(
                    "pivot {pivot_mag:e} at column {k} below threshold {tiny:e}"
                )));
            }
            if pivot_row != k {
                for j in 0..n {
                    f.swap(k * n + j, pivot_row * n + j);
                }
                perm.swap(k, pivot_row);
                sign = -sign;
            }
            let pivot = f[k * n + k];
            if pivot < 0.0 {
                sign = -sign;
            }
            log_det += pivot.abs().ln();
            for i in (k + 1)..n {
                let m = f[i * n + k] / pivot;
                f[i * n + k] = m;
                if m != 0.0 {
                    for j in (k + 1)..n {
                        f[i * n + j] -= m * f[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, factors: f, perm, log_abs_det: log_det, det_sign: sign })
    }

    /// Solves `A x = b` using the stored factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "solve expects length {}, got {}",
                self.n,
                b.len()
            )));
        }
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.factors[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.factors[i * n + j] * x[j];
            }
            x[i] = acc / self.factors[i * n + i];
        }
        Ok(x)
    }
}
