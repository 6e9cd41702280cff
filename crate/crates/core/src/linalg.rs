//! Accumulation and solution of small least-squares normal equations.

use crate::error::{LabError, Result};

/// Pivots below this fraction of the largest diagonal entry are treated as singular.
const RELATIVE_PIVOT_FLOOR: f64 = 1e-12;

/// Running sums of `XᵀX`, `Xᵀy` and `yᵀy` for a design with `dim` features.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    dim: usize,
    gram: Vec<f64>,
    moment: Vec<f64>,
    yy: f64,
    count: usize,
}

impl NormalEquations {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            gram: vec![0.0; dim * dim],
            moment: vec![0.0; dim],
            yy: 0.0,
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, features: &[f64], y: f64) {
        debug_assert_eq!(features.len(), self.dim);
        for i in 0..self.dim {
            let fi = features[i];
            self.moment[i] += fi * y;
            for j in 0..self.dim {
                self.gram[i * self.dim + j] += fi * features[j];
            }
        }
        self.yy += y * y;
        self.count += 1;
    }

    pub fn merge(&mut self, other: &NormalEquations) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.gram.iter_mut().zip(&other.gram) {
            *a += b;
        }
        for (a, b) in self.moment.iter_mut().zip(&other.moment) {
            *a += b;
        }
        self.yy += other.yy;
        self.count += other.count;
    }

    /// Solves `XᵀX β = Xᵀy` by Gaussian elimination with partial pivoting.
    pub fn solve(&self) -> Result<Vec<f64>> {
        solve_dense(&self.gram, &self.moment, self.dim)
    }

    /// Inverse of the Gram matrix, used for coefficient standard errors.
    pub fn gram_inverse(&self) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut inv = vec![0.0; n * n];
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            let x = solve_dense(&self.gram, &e, n)?;
            for row in 0..n {
                inv[row * n + col] = x[row];
            }
        }
        Ok(inv)
    }
}

fn solve_dense(matrix: &[f64], rhs: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut a = matrix.to_vec();
    let mut b = rhs.to_vec();
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(LabError::Degenerate { pivot: scale });
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("non-empty pivot range");
        let pivot = a[pivot_row * n + col];
        if pivot.abs() <= RELATIVE_PIVOT_FLOOR * scale {
            return Err(LabError::Degenerate { pivot: pivot.abs() });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor != 0.0 {
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Ok(x)
}
