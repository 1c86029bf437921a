//! Small square-matrix arithmetic and the trace-of-powers cycle penalty.
//!
//! Matrices here are tiny (side = number of variables, rarely above a few
//! dozen), so everything is plain row-major `Vec<f64>` with `O(n³)`
//! multiplication — no linear-algebra dependency needed.

use crate::error::{Error, Result};

/// Dense square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Zero matrix of side `n`.
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Identity matrix of side `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from rows, validating squareness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("matrix needs n >= 1".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "row of length {} in a matrix of side {}",
                    row.len(),
                    n
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { n, data })
    }

    /// Side length.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Raw row-major storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "matmul requires equal sides");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }
}

/// Evaluates `Σ_{k=1..K} β^k · tr(A^k)` together with its gradient
/// `Σ_{k=1..K} β^k · k · (A^{k−1})ᵀ`.
///
/// The value is the weighted count of closed directed walks of length up to
/// `K`: it is zero exactly when a nonnegative `A` has no directed cycle of
/// length ≤ `K`, which makes it a differentiable acyclicity penalty.
pub fn trace_power_series(a: &Matrix, beta: f64, k_max: usize) -> Result<(f64, Matrix)> {
    if k_max == 0 {
        return Err(Error::InvalidArgument(
            "trace power series needs K >= 1".into(),
        ));
    }
    let n = a.n();
    let mut value = 0.0;
    let mut grad = Matrix::zeros(n);
    // power holds A^{k−1} entering iteration k.
    let mut power = Matrix::identity(n);
    let mut beta_k = 1.0;
    for k in 1..=k_max {
        beta_k *= beta;
        // tr(A^k) = tr(power · A) without forming the product.
        let mut tr = 0.0;
        for i in 0..n {
            for j in 0..n {
                tr += power.get(i, j) * a.get(j, i);
            }
        }
        value += beta_k * tr;
        // d tr(A^k)/dA = k · (A^{k−1})ᵀ.
        let coeff = beta_k * k as f64;
        for i in 0..n {
            for j in 0..n {
                grad.data[i * n + j] += coeff * power.get(j, i);
            }
        }
        if k < k_max {
            power = power.matmul(a);
        }
    }
    Ok((value, grad))
}
