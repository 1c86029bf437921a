//! Natural cubic spline interpolation via the three-moment method.
//!
//! The spline's second derivatives ("moments") at the knots solve a
//! tridiagonal system with natural boundary conditions (zero curvature at
//! both ends); the system is diagonally dominant, so the Thomas algorithm
//! solves it stably in linear time. With only two knots the spline
//! degenerates to the straight line between them.

use crate::error::{Error, Result};

/// A C² piecewise-cubic curve through a set of knots.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivative of the spline at each knot.
    moments: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Fits the spline. Knots must be strictly increasing and finite.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidArgument(
                "spline needs at least 2 knots".into(),
            ));
        }
        if knots.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} knots for {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite knot or value".into()));
        }
        for w in knots.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidArgument(format!(
                    "knots must be strictly increasing, found {} then {}",
                    w[0], w[1]
                )));
            }
        }

        let m = knots.len();
        let mut moments = vec![0.0; m];
        let interior = m - 2;
        if interior > 0 {
            // Tridiagonal system μ_i·M_{i−1} + 2·M_i + λ_i·M_{i+1} = d_i
            // for i = 1..m−2, with M_0 = M_{m−1} = 0.
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let mut sub = vec![0.0; interior]; // μ_i
            let mut diag = vec![2.0; interior];
            let mut sup = vec![0.0; interior]; // λ_i
            let mut rhs = vec![0.0; interior];
            for eq in 0..interior {
                let i = eq + 1;
                let span = h[i - 1] + h[i];
                sub[eq] = h[i - 1] / span;
                sup[eq] = h[i] / span;
                rhs[eq] = 6.0
                    * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1])
                    / span;
            }
            // Thomas forward sweep and back substitution.
            for eq in 1..interior {
                let factor = sub[eq] / diag[eq - 1];
                diag[eq] -= factor * sup[eq - 1];
                rhs[eq] -= factor * rhs[eq - 1];
            }
            moments[interior] = rhs[interior - 1] / diag[interior - 1];
            for eq in (0..interior - 1).rev() {
                moments[eq + 1] = (rhs[eq] - sup[eq] * moments[eq + 2]) / diag[eq];
            }
        }

        Ok(NaturalCubicSpline {
            knots,
            values,
            moments,
        })
    }

    /// Index of the interval containing `x` (boundary intervals extend
    /// outward, so out-of-range evaluation extrapolates the end cubics).
    fn interval_of(&self, x: f64) -> usize {
        let m = self.knots.len();
        match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= m => m - 2,
            p => p - 1,
        }
    }

    /// Evaluates the spline at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.interval_of(x);
        let h = self.knots[i + 1] - self.knots[i];
        let a = self.knots[i + 1] - x;
        let b = x - self.knots[i];
        self.moments[i] * a * a * a / (6.0 * h)
            + self.moments[i + 1] * b * b * b / (6.0 * h)
            + (self.values[i] - self.moments[i] * h * h / 6.0) * a / h
            + (self.values[i + 1] - self.moments[i + 1] * h * h / 6.0) * b / h
    }

    /// Second derivative at `x` (linear within each interval).
    pub fn second_derivative(&self, x: f64) -> f64 {
        let i = self.interval_of(x);
        let h = self.knots[i + 1] - self.knots[i];
        (self.moments[i] * (self.knots[i + 1] - x) + self.moments[i + 1] * (x - self.knots[i])) / h
    }

    /// Knot second derivatives, mostly useful for inspection in tests.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }
}
