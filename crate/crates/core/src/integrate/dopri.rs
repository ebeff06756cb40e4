//! Dormand–Prince 5(4) with embedded error control.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights equal the last row of A (FSAL)
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// B minus the embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step relative to `max(1, |t|)`.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl Dopri5 {
    /// Integrates `y′ = f(t, y)` from `t0` through the increasing (or
    /// decreasing) stop times `stops`, landing exactly on each. Every accepted
    /// step is passed to `check` and recorded.
    pub fn solve<const N: usize>(
        &self,
        f: impl Fn(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        stops: &[f64],
        mut check: impl FnMut(f64, &[f64; N]) -> Result<()>,
    ) -> Result<Vec<(f64, [f64; N])>> {
        let Some(&t_end) = stops.last() else {
            return Ok(vec![(t0, y0)]);
        };
        let dir = (t_end - t0).signum();
        let mut out = vec![(t0, y0)];
        let (mut t, mut y) = (t0, y0);
        let mut k1 = f(t, &y);
        let mut h = 1e-3 * (t_end - t0).abs().max(1e-12) * dir;
        let mut steps = 0usize;

        for &stop in stops {
            while (stop - t) * dir > 0.0 {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::Stiffness { t, h });
                }
                if h.abs() < self.h_min * t.abs().max(1.0) {
                    return Err(Error::Stiffness { t, h });
                }
                let landing = (t + h - stop) * dir >= 0.0;
                let h_try = if landing { stop - t } else { h };

                let mut k = [[0.0; N]; 7];
                k[0] = k1;
                for s in 1..7 {
                    let mut ys = y;
                    for (i, yi) in ys.iter_mut().enumerate() {
                        *yi += h_try * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                    }
                    k[s] = f(t + C[s] * h_try, &ys);
                }
                let mut y_new = y;
                let mut err_sq = 0.0;
                for i in 0..N {
                    y_new[i] += h_try * (0..7).map(|j| B[j] * k[j][i]).sum::<f64>();
                    let e = h_try * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                    let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                    err_sq += (e / sc) * (e / sc);
                }
                let err = (err_sq / N as f64).sqrt();

                if !err.is_finite() {
                    h = 0.25 * h_try;
                    continue;
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err <= 1.0 {
                    t = if landing { stop } else { t + h_try };
                    y = y_new;
                    k1 = k[6];
                    check(t, &y)?;
                    out.push((t, y));
                    // a step clipped to land on a stop says little about the next one
                    if !landing {
                        h = h_try * factor;
                    }
                } else {
                    h = h_try * factor.min(1.0);
                }
            }
        }
        Ok(out)
    }
}
