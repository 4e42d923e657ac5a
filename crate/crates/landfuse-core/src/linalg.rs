//! Small dense-matrix helpers: row-major matrices, Gaussian elimination and
//! a cyclic Jacobi eigensolver for symmetric matrices.
//!
//! The sizes handled here are modest (kernel matrices of a few hundred rows,
//! normal equations of a few dozen unknowns), so simple O(n³) routines with
//! deterministic, platform-independent behavior are preferred over tuned
//! external solvers.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix dimensions {0}x{1} do not match data length {2}")]
    BadShape(usize, usize, usize),
    #[error("matrix is singular or rank-deficient")]
    Singular,
    #[error("Jacobi eigensolver did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("non-finite value encountered")]
    NonFinite,
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadShape(rows, cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from a row-major closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Column `c` as an owned vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Squared Euclidean distance between two equal-length slices.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Solve `a * x = b` for several right-hand sides stacked as the columns of
/// `b`, by Gaussian elimination with partial pivoting. `a` is consumed.
pub fn solve_systems(mut a: Matrix, mut b: Matrix) -> Result<Matrix, LinalgError> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(LinalgError::BadShape(a.rows(), a.cols(), b.rows()));
    }
    let k = b.cols();
    // Scale for the singularity test: largest absolute entry.
    let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = f64::EPSILON * scale.max(1.0) * n as f64;
    for col in 0..n {
        // Partial pivot: largest magnitude in the column at or below `col`.
        let mut pivot = col;
        for r in col + 1..n {
            if a.get(r, col).abs() > a.get(pivot, col).abs() {
                pivot = r;
            }
        }
        if a.get(pivot, col).abs() <= tol {
            return Err(LinalgError::Singular);
        }
        if pivot != col {
            for c in 0..n {
                let tmp = a.get(col, c);
                a.set(col, c, a.get(pivot, c));
                a.set(pivot, c, tmp);
            }
            for c in 0..k {
                let tmp = b.get(col, c);
                b.set(col, c, b.get(pivot, c));
                b.set(pivot, c, tmp);
            }
        }
        let inv = 1.0 / a.get(col, col);
        for r in col + 1..n {
            let factor = a.get(r, col) * inv;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a.get(r, c) - factor * a.get(col, c);
                a.set(r, c, v);
            }
            for c in 0..k {
                let v = b.get(r, c) - factor * b.get(col, c);
                b.set(r, c, v);
            }
        }
    }
    // Back substitution.
    let mut x = Matrix::zeros(n, k);
    for c in 0..k {
        for r in (0..n).rev() {
            let mut acc = b.get(r, c);
            for j in r + 1..n {
                acc -= a.get(r, j) * x.get(j, c);
            }
            x.set(r, c, acc / a.get(r, r));
        }
    }
    if !x.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    Ok(x)
}

/// Solve `a * x = b` for a single right-hand side.
pub fn solve(a: Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let rhs = Matrix::from_vec(b.len(), 1, b.to_vec())?;
    let x = solve_systems(a, rhs)?;
    Ok(x.data)
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues sorted non-increasing.
    pub values: Vec<f64>,
    /// Eigenvectors as the columns of a square matrix, ordered like `values`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Sweeps rotate away off-diagonal entries until their Frobenius norm falls
/// below `rel_tol` times the Frobenius norm of the input. Deterministic:
/// rotation order is fixed (row-cyclic) and there is no pivot search.
pub fn jacobi_eigh(a: &Matrix, rel_tol: f64, max_sweeps: usize) -> Result<SymEigen, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::BadShape(a.rows(), a.cols(), n * n));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut m = a.clone();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    if n == 1 {
        return Ok(SymEigen { values: vec![m.get(0, 0)], vectors: v });
    }
    let norm = a.frobenius_norm();
    let threshold = rel_tol * norm;

    let off = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                let x = m.get(r, c);
                s += 2.0 * x * x;
            }
        }
        s.sqrt()
    };

    let mut converged = norm == 0.0 || off(&m) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < max_sweeps {
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                // Stable rotation angle (Golub & Van Loan).
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Update the two rows/columns of the symmetric matrix.
                for i in 0..n {
                    let mip = m.get(i, p);
                    let miq = m.get(i, q);
                    m.set(i, p, c * mip - s * miq);
                    m.set(i, q, s * mip + c * miq);
                }
                for i in 0..n {
                    let mpi = m.get(p, i);
                    let mqi = m.get(q, i);
                    m.set(p, i, c * mpi - s * mqi);
                    m.set(q, i, s * mpi + c * mqi);
                }
                // Rotation leaves tiny asymmetry from rounding; pin the
                // zeroed pair exactly.
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
        sweeps += 1;
        converged = off(&m) <= threshold;
    }
    if !converged {
        return Err(LinalgError::NoConvergence(max_sweeps));
    }
    // Sort eigenpairs by descending eigenvalue; ties keep original order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok(SymEigen { values, vectors })
}
