//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solve `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. No pivoting; intended for
/// diagonally dominant systems.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::Length("tridiagonal bands must share one length".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::NonFinite("tridiagonal pivot"));
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::NonFinite("tridiagonal pivot"));
        }
        c[i] = upper[i] / beta;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// LU factors of a fixed tridiagonal matrix, for repeated solves.
#[derive(Debug, Clone)]
pub struct Factored {
    lower: Vec<f64>,
    /// Reciprocal pivots.
    inv_beta: Vec<f64>,
    /// Normalised super-diagonal `upper[i] / beta[i]`.
    c: Vec<f64>,
}

impl Factored {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if lower.len() != n || upper.len() != n || n == 0 {
            return Err(Error::Length("tridiagonal bands must share one nonzero length".into()));
        }
        let mut c = vec![0.0; n];
        let mut inv_beta = vec![0.0; n];
        for i in 0..n {
            let beta = if i == 0 { diag[0] } else { diag[i] - lower[i] * c[i - 1] };
            if beta == 0.0 || !beta.is_finite() {
                return Err(Error::NonFinite("tridiagonal pivot"));
            }
            inv_beta[i] = 1.0 / beta;
            c[i] = upper[i] * inv_beta[i];
        }
        Ok(Self {
            lower: lower.to_vec(),
            inv_beta,
            c,
        })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Overwrite `x` (holding the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.len();
        assert_eq!(x.len(), n, "right-hand side length");
        x[0] *= self.inv_beta[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_beta[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
    }
}
