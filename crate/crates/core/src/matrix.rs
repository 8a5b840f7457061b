//! Dense row-major matrix.
//!
//! Small by design: exactly the operations the network kernels need, written
//! as plain loops. Constructors validate and return `Result`; the arithmetic
//! methods are hot-path and assert on shape misuse instead (those asserts
//! document programmer errors, not recoverable conditions).

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    /// Build from a row-major buffer. Rejects length mismatches and
    /// non-finite entries; every matrix in the crate is finite from birth.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "buffer of length {} cannot fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {} has length {}, expected {}",
                bad,
                rows[bad].len(),
                cols
            )));
        }
        let data: Vec<F> = rows.iter().flatten().copied().collect();
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy of row `r` as a 1 x cols matrix.
    pub fn single_row(&self, r: usize) -> Matrix<F> {
        Matrix { rows: 1, cols: self.cols, data: self.row(r).to_vec() }
    }

    /// Copy of the rows listed in `idx`, in that order.
    pub fn gather_rows(&self, idx: &[usize]) -> Matrix<F> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// self (m x k) * rhs (k x n).
    pub fn matmul(&self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimensions {} vs {}", self.cols, rhs.rows);
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == F::zero() {
                    continue;
                }
                let lhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(lhs_row) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    /// self^T (k x m) * rhs (m x n): contraction over rows of both.
    pub fn transpose_matmul(&self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.rows, rhs.rows, "transpose_matmul: row counts {} vs {}", self.rows, rhs.rows);
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for r in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[r * self.cols + i];
                if a == F::zero() {
                    continue;
                }
                let rhs_row = &rhs.data[r * rhs.cols..(r + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    /// self (m x k) * rhs^T (k x n), with rhs given as n x k.
    pub fn matmul_transpose(&self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, rhs.cols, "matmul_transpose: inner dimensions {} vs {}", self.cols, rhs.cols);
        let mut out = Matrix::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..rhs.rows {
                let b_row = rhs.row(j);
                let mut acc = F::zero();
                for (&a, &b) in a_row.iter().zip(b_row) {
                    acc = acc + a * b;
                }
                out.data[i * rhs.rows + j] = acc;
            }
        }
        out
    }

    /// Add `bias` to every row; `bias.len()` must equal `cols`.
    pub fn add_row_broadcast(&self, bias: &[F]) -> Matrix<F> {
        assert_eq!(bias.len(), self.cols, "add_row_broadcast: bias length {} vs {} cols", bias.len(), self.cols);
        let mut out = self.clone();
        for r in 0..out.rows {
            for (v, &b) in out.row_mut(r).iter_mut().zip(bias) {
                *v = *v + b;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Matrix<F> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Elementwise combine with an identically shaped matrix.
    pub fn zip_map(&self, other: &Matrix<F>, f: impl Fn(F, F) -> F) -> Matrix<F> {
        assert_eq!(self.shape(), other.shape(), "zip_map: shapes {:?} vs {:?}", self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn hadamard(&self, other: &Matrix<F>) -> Matrix<F> {
        self.zip_map(other, |a, b| a * b)
    }

    /// self + alpha * other.
    pub fn scaled_add(&self, other: &Matrix<F>, alpha: F) -> Matrix<F> {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    pub fn col_sums(&self) -> Vec<F> {
        let mut sums = vec![F::zero(); self.cols];
        for r in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(r)) {
                *s = *s + v;
            }
        }
        sums
    }
}

impl<F: Scalar> Index<(usize, usize)> for Matrix<F> {
    type Output = F;

    fn index(&self, (r, c): (usize, usize)) -> &F {
        debug_assert!(r < self.rows && c < self.cols, "index ({r}, {c}) out of {:?}", self.shape());
        &self.data[r * self.cols + c]
    }
}

impl<F: Scalar> IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut F {
        debug_assert!(r < self.rows && c < self.cols, "index ({r}, {c}) out of {:?}", self.shape());
        &mut self.data[r * self.cols + c]
    }
}
