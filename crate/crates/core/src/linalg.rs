//! Small dense column-major matrix and the handful of kernels the
//! factorization needs (products, Gram matrices, Cholesky).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense real matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major storage.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", rows * cols),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let oc = other.col(j);
            let dst = out.col_mut(j);
            for (k, &b) in oc.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let src = &self.data[k * self.rows..(k + 1) * self.rows];
                for (d, &a) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self^T * other`.
    pub fn tr_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "tr_matmul shape mismatch");
        Matrix::from_fn(self.cols, other.cols, |i, j| dot(self.col(i), other.col(j)))
    }

    /// `self * other^T`.
    pub fn matmul_tr(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_tr shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for k in 0..self.cols {
            let a = self.col(k);
            let b = other.col(k);
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0.0 {
                    continue;
                }
                for (d, &ai) in out.col_mut(j).iter_mut().zip(a) {
                    *d += ai * bj;
                }
            }
        }
        out
    }

    /// `self^T * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for (j, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * x;
            }
        }
        out
    }

    /// Row Gram matrix `self * self^T`.
    pub fn row_gram(&self) -> Matrix {
        self.matmul_tr(self)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Keeps the listed columns, in order.
    pub fn select_cols(&self, keep: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for &j in keep {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: keep.len(),
            data,
        }
    }

    /// Keeps the listed rows, in order.
    pub fn select_rows(&self, keep: &[usize]) -> Matrix {
        Matrix::from_fn(keep.len(), self.cols, |i, j| self[(keep[i], j)])
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[&Matrix]) -> Result<Matrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let mut data = Vec::new();
        let mut cols = 0;
        for b in blocks {
            if b.rows != rows {
                return Err(Error::ShapeMismatch {
                    expected: format!("{rows} rows"),
                    got: format!("{} rows", b.rows),
                });
            }
            data.extend_from_slice(&b.data);
            cols += b.cols;
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Position of the first non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p % self.rows.max(1), p / self.rows.max(1)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors `a`. On failure returns the index of the first pivot that was
    /// not strictly positive.
    pub fn new(a: &Matrix) -> core::result::Result<Self, usize> {
        Self::with_pivot_tol(a, 0.0)
    }

    /// Like [`Cholesky::new`], but also rejects pivots that fall below
    /// `rel_tol` times the corresponding diagonal entry of `a`.
    pub fn with_pivot_tol(a: &Matrix, rel_tol: f64) -> core::result::Result<Self, usize> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > rel_tol * a[(j, j)]) || !(d > 0.0) || !d.is_finite() {
                return Err(j);
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.rows();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
