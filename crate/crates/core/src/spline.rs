//! Not-a-knot cubic spline interpolation.

use crate::error::{Error, Result};
use crate::tridiag;

/// Interpolating cubic spline with not-a-knot end conditions, so cubic data
/// is reproduced exactly.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    curvature: Vec<f64>,
}

impl CubicSpline {
    pub fn not_a_knot(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n != values.len() {
            return Err(Error::Length("spline knots and values differ in length".into()));
        }
        if n < 4 {
            return Err(Error::Length("not-a-knot spline needs at least four knots".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("spline knots must increase strictly".into()));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = values
            .windows(2)
            .zip(&h)
            .map(|(v, hi)| (v[1] - v[0]) / hi)
            .collect();

        // Unknowns: curvature at knots 1..=n-2. The end curvatures are
        // eliminated using the not-a-knot conditions (third derivative
        // continuous at knots 1 and n-2).
        let m = n - 2;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            lower[k] = h[i - 1];
            diag[k] = 2.0 * (h[i - 1] + h[i]);
            upper[k] = h[i];
            rhs[k] = 6.0 * (slope[i] - slope[i - 1]);
        }
        // M_0 = ((h0 + h1) M_1 - h0 M_2) / h1
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 * (h0 + h1) / h1;
        if m > 1 {
            upper[0] -= h0 * h0 / h1;
        }
        // M_{n-1} = ((h_{n-2} + h_{n-3}) M_{n-2} - h_{n-2} M_{n-3}) / h_{n-3}
        let (ha, hb) = (h[n - 2], h[n - 3]);
        diag[m - 1] += ha * (ha + hb) / hb;
        if m > 1 {
            lower[m - 1] -= ha * ha / hb;
        }
        let inner = tridiag::solve(&lower, &diag, &upper, &rhs)?;

        let mut curvature = Vec::with_capacity(n);
        let first = if m > 1 {
            ((h0 + h1) * inner[0] - h0 * inner[1]) / h1
        } else {
            inner[0]
        };
        curvature.push(first);
        curvature.extend_from_slice(&inner);
        let last = if m > 1 {
            ((ha + hb) * inner[m - 1] - ha * inner[m - 2]) / hb
        } else {
            inner[0]
        };
        curvature.push(last);
        Ok(Self {
            knots,
            values,
            curvature,
        })
    }

    /// Evaluate the spline; points outside the knot range use the end pieces.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        let k = self.knots.partition_point(|&t| t <= x).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - x) / h, (x - x0) / h);
        let (m0, m1) = (self.curvature[k], self.curvature[k + 1]);
        a * self.values[k]
            + b * self.values[k + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}
