//! Dense vector helpers and a small column-major matrix.

use alloc::vec;
use alloc::vec::Vec;

/// `√(Σ v_i²)`; zero for an empty slice.
pub fn euclidean_norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|a| a * a).sum::<f64>())
}

/// Componentwise `max(v_i, 0)`.
pub fn positive_part(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&a| a.max(0.0)).collect()
}

/// `‖v_+‖`, without allocating.
pub fn positive_part_norm(v: &[f64]) -> f64 {
    libm::sqrt(
        v.iter()
            .map(|&a| {
                let p = a.max(0.0);
                p * p
            })
            .sum::<f64>(),
    )
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}

/// `y += a·x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|a| a.is_finite())
}

/// Column-major dense matrix. Column `j` is contiguous, which matches the
/// Jacobian convention used by the oracles (column `j` is `∇h_j`).
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

    /// Builds a matrix from its columns. All columns must share one length.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column {j} has the wrong length");
            m.col_mut(j).copy_from_slice(c);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// `out += scale · A·v`
    pub fn mul_vec_acc(&self, v: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                axpy(scale * vj, self.col(j), out);
            }
        }
    }

    /// `Aᵀ·v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    /// Frobenius norm, an upper bound on the spectral norm.
    pub fn frobenius_norm(&self) -> f64 {
        euclidean_norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }
}
