//! Initial-value integration of the necessary ODE `r ψ ψ″ = r (ψ′)² − ψ ψ′`
//! and recovery of the potential from `(n−2)ψ″ + ψ h″ + 2ψ′h′ = 0`.

mod dopri;
mod hermite;

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{Interval, Jet, RadialFn, RadialProfile};

pub use dopri::Dopri5;
pub use hermite::QuinticHermite;

const POSITIVITY_FLOOR: f64 = 1e-12;
const PRESCAN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub r: f64,
    pub psi: f64,
    pub dpsi: f64,
    /// `r ψ′ / ψ`
    pub s_local: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaTrajectory {
    pub samples: Vec<TrajectoryPoint>,
    /// `r₀ ψ′₀ / ψ₀`
    pub s_star: f64,
    /// `ψ₀ / r₀^{s*}`
    pub k_star: f64,
}

impl LemmaTrajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.samples.last().expect("trajectory is never empty")
    }

    /// `max |ψ − k* r^{s*}| / ψ` over the samples.
    pub fn closure_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|p| (p.psi - self.k_star * p.r.powf(self.s_star)).abs() / p.psi)
            .fold(0.0, f64::max)
    }

    /// `max |s(r) − s*|` over the samples.
    pub fn exponent_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|p| (p.s_local - self.s_star).abs())
            .fold(0.0, f64::max)
    }

    /// Accuracy check in log variables `u = ln r`, `v = ln ψ`, where the ODE
    /// becomes `v″ = 0`: returns `max |v(u) − v₀ − s*(u − u₀)|`.
    pub fn log_form_error(&self) -> f64 {
        let first = self.samples[0];
        let (u0, v0) = (first.r.ln(), first.psi.ln());
        self.samples
            .iter()
            .map(|p| (p.psi.ln() - v0 - self.s_star * (p.r.ln() - u0)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `r,psi,dpsi,s_local`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.samples {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn output_stops(r0: f64, r1: f64, samples: Option<usize>) -> Vec<f64> {
    match samples {
        Some(k) if k > 0 => (1..=k)
            .map(|i| {
                if i == k {
                    r1
                } else {
                    r0 + (r1 - r0) * i as f64 / k as f64
                }
            })
            .collect(),
        _ => vec![r1],
    }
}

/// Integrates `ψ″ = (ψ′)²/ψ − ψ′/r` from `(r₀, ψ₀, ψ′₀)` to `r₁`.
///
/// With `samples = Some(k)` the trajectory holds `k + 1` equally spaced
/// points; otherwise every accepted step is kept.
pub fn integrate_lemma(r0: f64, psi0: f64, dpsi0: f64, r1: f64, samples: Option<usize>) -> Result<LemmaTrajectory> {
    integrate_lemma_with(&Dopri5::default(), r0, psi0, dpsi0, r1, samples)
}

pub fn integrate_lemma_with(
    solver: &Dopri5,
    r0: f64,
    psi0: f64,
    dpsi0: f64,
    r1: f64,
    samples: Option<usize>,
) -> Result<LemmaTrajectory> {
    if !(r0 > 0.0 && r1 > 0.0) || !r0.is_finite() || !r1.is_finite() {
        return Err(Error::Parameter(format!("need r0, r1 > 0, got r0 = {r0}, r1 = {r1}")));
    }
    if !(psi0 > 0.0) || !dpsi0.is_finite() {
        return Err(Error::Parameter(format!(
            "need psi0 > 0 and finite dpsi0, got ({psi0}, {dpsi0})"
        )));
    }
    let s_star = r0 * dpsi0 / psi0;
    let k_star = psi0 / r0.powf(s_star);

    let stops = output_stops(r0, r1, samples);
    let rhs = |r: f64, y: &[f64; 2]| [y[1], y[1] * y[1] / y[0] - y[1] / r];
    let path = solver.solve(rhs, r0, [psi0, dpsi0], &stops, |r, y| {
        if y[0] <= POSITIVITY_FLOOR || !y[0].is_finite() {
            Err(Error::PositivityBreakdown { r, psi: y[0] })
        } else {
            Ok(())
        }
    })?;

    let keep = |r: f64| samples.is_none() || r == r0 || stops.contains(&r);
    let samples = path
        .into_iter()
        .filter(|(r, _)| keep(*r))
        .map(|(r, y)| TrajectoryPoint {
            r,
            psi: y[0],
            dpsi: y[1],
            s_local: r * y[1] / y[0],
        })
        .collect();
    Ok(LemmaTrajectory {
        samples,
        s_star,
        k_star,
    })
}

/// Potential recovered by integrating `(ψ² h′)′ = −(n−2) ψ ψ″` and `h′ = w/ψ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredPotential {
    interp: QuinticHermite,
    domain: Interval,
}

impl RecoveredPotential {
    pub fn nodes(&self) -> &[(f64, Jet)] {
        self.interp.nodes()
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Profile with the given `ψ` and this potential, on the integration interval.
    pub fn into_profile(self, psi: Arc<dyn RadialFn>) -> RadialProfile {
        let domain = self.domain;
        RadialProfile::new(psi, Arc::new(self), domain)
    }
}

impl RadialFn for RecoveredPotential {
    fn jet(&self, r: f64) -> Jet {
        self.interp.eval(r)
    }
}

/// Solves `(n−2)ψ″ + ψ h″ + 2ψ′h′ = 0` for `h` on `[r₀, r₁]` (either
/// orientation) with `h(r₀) = h_init.0`, `h′(r₀) = h_init.1`.
pub fn recover_h(psi: &dyn RadialFn, n: usize, h_init: (f64, f64), r0: f64, r1: f64) -> Result<RecoveredPotential> {
    if n < 3 {
        return Err(Error::Parameter(format!("base dimension n = {n} < 3")));
    }
    if r0 == r1 || !r0.is_finite() || !r1.is_finite() {
        return Err(Error::Parameter(format!("degenerate interval [{r0}, {r1}]")));
    }
    let nf = n as f64;
    let start = psi.jet(r0);
    if start.value <= POSITIVITY_FLOOR {
        return Err(Error::PositivityBreakdown {
            r: r0,
            psi: start.value,
        });
    }
    // the integrator would stall before reaching a zero of ψ, so look for one first
    for i in 1..=PRESCAN {
        let r = r0 + (r1 - r0) * i as f64 / PRESCAN as f64;
        let p = psi.value(r);
        if p <= POSITIVITY_FLOOR || !p.is_finite() {
            return Err(Error::PositivityBreakdown { r, psi: p });
        }
    }
    let w0 = start.value * start.value * h_init.1;
    let rhs = |r: f64, y: &[f64; 2]| {
        let j = psi.jet(r);
        [-(nf - 2.0) * j.value * j.d2, y[0] / (j.value * j.value)]
    };
    let path = Dopri5::default().solve(rhs, r0, [w0, h_init.0], &[r1], |r, _| {
        let p = psi.value(r);
        if p <= POSITIVITY_FLOOR || !p.is_finite() {
            Err(Error::PositivityBreakdown { r, psi: p })
        } else {
            Ok(())
        }
    })?;

    let mut nodes: Vec<(f64, Jet)> = path
        .into_iter()
        .map(|(r, [w, h])| {
            let j = psi.jet(r);
            let h1 = w / (j.value * j.value);
            let h2 = -((nf - 2.0) * j.d2 + 2.0 * j.d1 * h1) / j.value;
            (r, Jet::new(h, h1, h2))
        })
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = (r0.min(r1), r0.max(r1));
    Ok(RecoveredPotential {
        interp: QuinticHermite::new(nodes),
        domain: Interval::new(lo, hi)?,
    })
}
