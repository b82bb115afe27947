//! Lawson-Hanson active-set nonnegative least squares.
//!
//! The solver works on the normal equations: the Gram matrix `M^T M` is
//! formed once, so repeated solves against the same design matrix (one per
//! period when inferring activations) only pay for the `M^T b` product and
//! the small passive-set Cholesky factorizations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

/// Dual feasibility tolerance, relative to `max |M^T b|`.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Pivots of the passive-set Gram block below this fraction of their
/// diagonal are treated as linearly dependent columns.
const PIVOT_REL_TOL: f64 = 1e-12;

/// Solves `min ||M x - b||_2` subject to `x >= 0`.
pub fn nnls(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput("nnls needs a non-empty design matrix".into()));
    }
    if b.len() != rows {
        return Err(Error::ShapeMismatch {
            expected: alloc::format!("rhs of length {rows}"),
            got: alloc::format!("length {}", b.len()),
        });
    }
    if let Some((row, col)) = m.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    if let Some(row) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row, col: cols });
    }
    GramNnls::new(m).solve_mtb(&m.tr_mul_vec(b))
}

/// Pre-factored NNLS problem for a fixed design matrix.
#[derive(Debug, Clone)]
pub struct GramNnls {
    design: Matrix,
    gram: Matrix,
    rel_tol: f64,
    max_iters: usize,
}

impl GramNnls {
    pub fn new(design: &Matrix) -> Self {
        let k = design.cols();
        Self {
            design: design.clone(),
            gram: design.tr_matmul(design),
            rel_tol: DEFAULT_REL_TOL,
            max_iters: 3 * k,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// Solves for the right-hand side `b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_mtb(&self.design.tr_mul_vec(b))
    }

    /// Solves given the precomputed product `M^T b`.
    pub fn solve_mtb(&self, mtb: &[f64]) -> Result<Vec<f64>> {
        let k = self.gram.rows();
        let mut x = vec![0.0; k];
        let scale = mtb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok(x);
        }
        let tol = self.rel_tol * scale;

        let mut passive = vec![false; k];
        let mut excluded = vec![false; k];
        let mut w = vec![0.0; k];
        let mut iterations = 0;

        loop {
            self.dual(mtb, &x, &mut w);
            let entering = (0..k)
                .filter(|&j| !passive[j] && !excluded[j] && w[j] > tol)
                .max_by(|&a, &b| w[a].total_cmp(&w[b]));
            let Some(j) = entering else {
                return Ok(x);
            };
            iterations += 1;
            if iterations > self.max_iters {
                return Err(Error::NnlsNotConverged { iterations: self.max_iters, best: x });
            }

            passive[j] = true;
            let mut first = true;
            // Each pass drops at least one index, so this terminates within k passes.
            loop {
                let set: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
                let z = self.solve_passive(&set, mtb);
                let z = match z {
                    Some(z) if !(first && z[set.iter().position(|&i| i == j).unwrap()] <= 0.0) => z,
                    // Column j is (numerically) dependent on the passive set,
                    // or would enter at a non-positive value.
                    _ => {
                        passive[j] = false;
                        excluded[j] = true;
                        break;
                    }
                };
                first = false;

                if z.iter().all(|&v| v > 0.0) {
                    for (&i, &v) in set.iter().zip(&z) {
                        x[i] = v;
                    }
                    excluded.iter_mut().for_each(|e| *e = false);
                    break;
                }

                // Step back toward the current iterate until the first
                // coordinate hits the boundary.
                let mut alpha = f64::INFINITY;
                let mut blocking = set[0];
                for (&i, &zi) in set.iter().zip(&z) {
                    if zi <= 0.0 {
                        let a = x[i] / (x[i] - zi);
                        if a < alpha {
                            alpha = a;
                            blocking = i;
                        }
                    }
                }
                for (&i, &zi) in set.iter().zip(&z) {
                    x[i] += alpha * (zi - x[i]);
                }
                x[blocking] = 0.0;
                passive[blocking] = false;
                for &i in &set {
                    if x[i] <= 0.0 {
                        x[i] = 0.0;
                        passive[i] = false;
                    }
                }
            }
        }
    }

    fn dual(&self, mtb: &[f64], x: &[f64], w: &mut [f64]) {
        let k = x.len();
        for i in 0..k {
            let mut g = mtb[i];
            for (j, &xj) in x.iter().enumerate() {
                if xj != 0.0 {
                    g -= self.gram[(i, j)] * xj;
                }
            }
            w[i] = g;
        }
    }

    fn solve_passive(&self, set: &[usize], mtb: &[f64]) -> Option<Vec<f64>> {
        let sub = Matrix::from_fn(set.len(), set.len(), |a, b| self.gram[(set[a], set[b])]);
        let chol = Cholesky::with_pivot_tol(&sub, PIVOT_REL_TOL).ok()?;
        let rhs: Vec<f64> = set.iter().map(|&i| mtb[i]).collect();
        Some(chol.solve(&rhs))
    }
}

/// Gradient of `0.5 ||M x - b||^2`, i.e. `M^T (M x - b)`.
pub fn gradient(m: &Matrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = m.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    m.tr_mul_vec(&r)
}

/// Checks the KKT conditions of a candidate NNLS solution: `x >= 0`,
/// `|g_i| <= tol` where `x_i > 0` and `g_i >= -tol` where `x_i == 0`.
pub fn kkt_holds(m: &Matrix, x: &[f64], b: &[f64], tol: f64) -> bool {
    let g = gradient(m, x, b);
    x.iter().zip(&g).all(|(&xi, &gi)| {
        if xi < 0.0 {
            false
        } else if xi > 0.0 {
            gi.abs() <= tol
        } else {
            gi >= -tol
        }
    })
}
