use crate::error::{Error, Result};

use super::radial::{Jet, RadialFn};

/// Natural cubic spline through tabulated samples `(rᵢ, yᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    // second derivatives at the knots
    moments: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Parameter(format!(
                "spline needs equal sample counts, got {} knots and {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.len() < 4 {
            return Err(Error::Parameter("cubic spline needs at least 4 samples".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("spline knots must be strictly increasing".into()));
        }
        if knots.iter().chain(values).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("spline samples must be finite".into()));
        }

        let n = knots.len();
        let mut moments = vec![0.0; n];
        // Tridiagonal system for interior moments (Thomas algorithm).
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = knots[i] - knots[i - 1];
            let h1 = knots[i + 1] - knots[i];
            let lower = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0;
            if i > 1 {
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
        }
        for i in (1..n - 1).rev() {
            let next = if i + 1 < n - 1 { moments[i + 1] } else { 0.0 };
            moments[i] = (rhs[i] - upper[i] * next) / diag[i];
        }

        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            moments,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn segment(&self, r: f64) -> usize {
        match self.knots.partition_point(|&k| k <= r) {
            0 => 0,
            i if i >= self.knots.len() => self.knots.len() - 2,
            i => i - 1,
        }
    }
}

impl RadialFn for CubicSpline {
    fn jet(&self, r: f64) -> Jet {
        let i = self.segment(r);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let h = x1 - x0;
        let a = (x1 - r) / h;
        let b = (r - x0) / h;
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        Jet::new(value, d1, d2)
    }
}
