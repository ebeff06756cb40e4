//! Residuals of every equation system satisfied by radial gradient
//! ρ-Einstein solitons on `(ℝⁿ, g/ψ²) × Fᵐ`.
//!
//! Identifiers `R15`–`R21` follow the display numbering of the source
//! derivation: `R15`–`R17` are the radial reduction for general ρ, `R18`–`R20`
//! the Schouten specialisation and `R21` the necessary ODE for `ψ`.
//! `Pde1`–`Pde3` are the off-diagonal, diagonal and fiber equations in
//! coordinates.

use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::curvature::{point_data, PointBase};
use crate::error::{Error, Result};
use crate::profiles::{RadialProfile, Signature, SolitonParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EquationId {
    Pde1,
    Pde2,
    Pde3,
    R15,
    R16,
    R17,
    R18,
    R19,
    R20,
    R21,
}

impl EquationId {
    pub fn formula(self) -> &'static str {
        match self {
            Self::Pde1 => "(n-2)psi_ij + psi h_ij + psi_i h_j + psi_j h_i = 0, i != j",
            Self::Pde2 => "diagonal base equation minus (lambda_F m rho + lambda~) eps_i",
            Self::Pde3 => "sum eps_k((n-1)n rho psi_k^2 - 2(n-1) rho psi psi_kk) - lambda_F(m rho - 1) - lambda~",
            Self::R15 | Self::R18 => "(n-2)psi'' + psi h'' + 2 psi' h'",
            Self::R16 => "2psi[2(n-1)(1-n rho)psi' + psi h'] + 4r[(1-2(n-1)rho)psi psi'' + (n-1)(n rho-1)psi'^2 - psi psi' h'] - (lambda_F m rho + lambda~)",
            Self::R17 => "-4n(n-1)rho psi psi' + 4r[(n-1)n rho psi'^2 - 2(n-1)rho psi psi''] - lambda_F(m rho - 1) - lambda~",
            Self::R19 => "psi[(n-2)psi' + psi h'] + r[(2-n)psi'^2 - 2 psi psi' h'] - lambda_F m/(4(n-1)) - lambda~/2",
            Self::R20 => "-n psi psi' + 2r[(n/2)psi'^2 - psi psi''] - lambda_F(m-2n+2)/(4(n-1)) - lambda~/2",
            Self::R21 => "r psi psi'' - r psi'^2 + psi psi'",
        }
    }
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Residuals of the coordinate PDE system at one base point.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeResiduals {
    /// `(i, j, value)` for `i < j`.
    pub offdiag: Vec<(usize, usize, f64)>,
    pub diag: Vec<f64>,
    pub fiber: f64,
}

impl PdeResiduals {
    /// Off-diagonal, then diagonal, then the fiber residual.
    pub fn values(&self) -> Vec<f64> {
        self.offdiag
            .iter()
            .map(|t| t.2)
            .chain(self.diag.iter().copied())
            .chain(std::iter::once(self.fiber))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn offdiag(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.offdiag.iter().find(|t| t.0 == a && t.1 == b).map(|t| t.2)
    }
}

pub fn pde_residuals(
    profile: &RadialProfile,
    sig: &Signature,
    params: &SolitonParams,
    x: &PointBase,
) -> Result<PdeResiduals> {
    if sig.dim() != params.n {
        return Err(Error::Parameter(format!(
            "signature dimension {} differs from n = {}",
            sig.dim(),
            params.n
        )));
    }
    let data = point_data(profile, sig, x)?;
    let (psi, h) = (&data.psi, &data.h);
    let n = sig.dim();
    let nf = n as f64;
    let rho = params.rho;
    let p = psi.value;

    let mut offdiag = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let v =
                (nf - 2.0) * psi.hess[(i, j)] + p * h.hess[(i, j)] + psi.grad[i] * h.grad[j] + psi.grad[j] * h.grad[i];
            offdiag.push((i, j, v));
        }
    }

    let trace_sum: f64 = (0..n)
        .map(|k| {
            let (pk, pkk, hk) = (psi.grad[k], psi.hess[(k, k)], h.grad[k]);
            sig.eps(k)
                * (p * pkk - (nf - 1.0) * pk * pk - p * pk * hk - 2.0 * (nf - 1.0) * rho * p * pkk
                    + (nf - 1.0) * nf * rho * pk * pk)
        })
        .sum();
    let rhs = params.lambda_f * params.m as f64 * rho + params.lambda_tilde;
    let diag = (0..n)
        .map(|i| {
            sig.eps(i) * trace_sum
                + (nf - 2.0) * p * psi.hess[(i, i)]
                + p * p * h.hess[(i, i)]
                + 2.0 * p * psi.grad[i] * h.grad[i]
                - rhs * sig.eps(i)
        })
        .collect();

    let fiber_sum: f64 = (0..n)
        .map(|k| {
            sig.eps(k)
                * ((nf - 1.0) * nf * rho * psi.grad[k] * psi.grad[k] - 2.0 * (nf - 1.0) * rho * p * psi.hess[(k, k)])
        })
        .sum();
    let fiber = fiber_sum - params.lambda_f * (params.m as f64 * rho - 1.0) - params.lambda_tilde;

    Ok(PdeResiduals { offdiag, diag, fiber })
}

/// `(R15, R16, R17)` at `r` for general ρ.
pub fn ode_residuals(profile: &RadialProfile, params: &SolitonParams, r: f64) -> Result<[f64; 3]> {
    let (psi, h) = profile.eval(r)?;
    let nf = params.n as f64;
    let m = params.m as f64;
    let rho = params.rho;
    let (p, p1, p2) = (psi.value, psi.d1, psi.d2);
    let (h1, h2) = (h.d1, h.d2);

    let r15 = (nf - 2.0) * p2 + p * h2 + 2.0 * p1 * h1;
    let r16 = 2.0 * p * (2.0 * (nf - 1.0) * (1.0 - nf * rho) * p1 + p * h1)
        + 4.0 * r * ((1.0 - 2.0 * (nf - 1.0) * rho) * p * p2 + (nf - 1.0) * (nf * rho - 1.0) * p1 * p1 - p * p1 * h1)
        - (params.lambda_f * m * rho + params.lambda_tilde);
    let r17 = -4.0 * nf * (nf - 1.0) * rho * p * p1
        + 4.0 * r * ((nf - 1.0) * nf * rho * p1 * p1 - 2.0 * (nf - 1.0) * rho * p * p2)
        - params.lambda_f * (m * rho - 1.0)
        - params.lambda_tilde;
    Ok([r15, r16, r17])
}

/// Schouten residuals together with the magnitude of the largest term in
/// each equation (used to judge cancellation error).
pub(crate) fn schouten_terms(profile: &RadialProfile, params: &SolitonParams, r: f64) -> Result<[(f64, f64); 3]> {
    if !params.is_schouten() {
        return Err(Error::Parameter(format!(
            "Schouten residuals need rho = 1/(2(n-1)) = {}, got {}",
            crate::profiles::schouten_rho(params.n),
            params.rho
        )));
    }
    let (psi, h) = profile.eval(r)?;
    let nf = params.n as f64;
    let m = params.m as f64;
    let (p, p1, p2) = (psi.value, psi.d1, psi.d2);
    let (h1, h2) = (h.d1, h.d2);
    let (lf, lt) = (params.lambda_f, params.lambda_tilde);

    let t18 = [(nf - 2.0) * p2, p * h2, 2.0 * p1 * h1];
    let t19 = [
        p * (nf - 2.0) * p1,
        p * p * h1,
        r * (2.0 - nf) * p1 * p1,
        -2.0 * r * p * p1 * h1,
        -lf * m / (4.0 * (nf - 1.0)),
        -lt / 2.0,
    ];
    let t20 = [
        -nf * p * p1,
        r * nf * p1 * p1,
        -2.0 * r * p * p2,
        -lf * (m - 2.0 * nf + 2.0) / (4.0 * (nf - 1.0)),
        -lt / 2.0,
    ];
    let fold = |t: &[f64]| -> (f64, f64) { (t.iter().sum(), t.iter().fold(0.0, |a: f64, v| a.max(v.abs()))) };
    Ok([fold(&t18), fold(&t19), fold(&t20)])
}

/// `(R18, R19, R20)` at `r`; requires `ρ = 1/(2(n−1))`.
pub fn schouten_residuals(profile: &RadialProfile, params: &SolitonParams, r: f64) -> Result<[f64; 3]> {
    let t = schouten_terms(profile, params, r)?;
    Ok([t[0].0, t[1].0, t[2].0])
}

/// `r ψ ψ″ − r (ψ′)² + ψ ψ′`.
pub fn lemma_ode_residual(profile: &RadialProfile, r: f64) -> Result<f64> {
    let (psi, _) = profile.eval(r)?;
    let (p, p1, p2) = (psi.value, psi.d1, psi.d2);
    Ok(r * p * p2 - r * p1 * p1 + p * p1)
}

/// One admissible exponent `s` of a power-law solution `ψ = k₂ r^s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentBranch {
    pub s: Rational64,
    /// `s = 0` (constant `ψ`), excluded by the `h′ ≠ 0` hypothesis.
    pub degenerate: bool,
    /// For `s = 1/2`: the `k₂²` forced by `RHS = −(n−2)k₂²/4`.
    pub k2_squared: Option<Rational64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentVerdict {
    /// `λ_F(m−2n+2)/(4(n−1)) + λ̃/2`.
    pub rhs: Rational64,
    pub branches: Vec<ExponentBranch>,
    /// Every admissible branch also satisfies the constant part of `R19`.
    pub consistent: bool,
}

impl ExponentVerdict {
    pub fn exponents(&self) -> Vec<Rational64> {
        self.branches.iter().map(|b| b.s).collect()
    }
}

/// Solves `s(s−1)(n−2)k₂² r^{2s−1} = RHS` for `r`-independent solutions.
///
/// `RHS = 0` admits `s ∈ {0, 1}`; `RHS < 0` admits `s = 1/2` with
/// `k₂² = −4·RHS/(n−2)`; `RHS > 0` admits nothing.
pub fn exponent_constraint(
    n: usize,
    m: usize,
    lambda_f: Rational64,
    lambda_tilde: Rational64,
) -> Result<ExponentVerdict> {
    if n < 3 || m < 2 {
        return Err(Error::Parameter(format!(
            "need n >= 3 and m >= 2, got n = {n}, m = {m}"
        )));
    }
    let (ni, mi) = (n as i64, m as i64);
    let zero = Rational64::from_integer(0);
    let rhs = lambda_f * Rational64::new(mi - 2 * ni + 2, 4 * (ni - 1)) + lambda_tilde / 2;
    // constant part of R19 for the same data
    let rhs19 = lambda_f * Rational64::new(mi, 4 * (ni - 1)) + lambda_tilde / 2;

    let (branches, consistent) = if rhs == zero {
        (
            vec![
                ExponentBranch {
                    s: zero,
                    degenerate: true,
                    k2_squared: None,
                },
                ExponentBranch {
                    s: Rational64::from_integer(1),
                    degenerate: false,
                    k2_squared: None,
                },
            ],
            true,
        )
    } else if rhs < zero {
        let k2sq = -rhs * 4 / (ni - 2);
        // R19 constant must equal (n−2)k₂²/4 = −RHS
        (
            vec![ExponentBranch {
                s: Rational64::new(1, 2),
                degenerate: false,
                k2_squared: Some(k2sq),
            }],
            rhs19 == -rhs,
        )
    } else {
        (Vec::new(), false)
    };

    Ok(ExponentVerdict {
        rhs,
        branches,
        consistent,
    })
}

/// Agreement between the coordinate PDE residuals and the radial ODE
/// residuals at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub r: f64,
    pub ode: [f64; 3],
    /// max over `i<j` of `|Pde1_ij − 4εᵢεⱼxᵢxⱼ R15|`, relative to term size
    pub offdiag_mismatch: f64,
    /// max over `i` of `|Pde2_i − (εᵢ R16 + 4xᵢ² ψ R15)|`, relative
    pub diag_mismatch: f64,
    /// `|Pde3 − R17|`, relative
    pub fiber_mismatch: f64,
    pub ode_vanishes: bool,
    pub pde_max_abs: f64,
    pub holds: bool,
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Checks the radial chain-rule reduction at `x`: each PDE residual equals its
/// ODE combination, and vanishing ODE residuals force vanishing PDE residuals.
/// Comparisons are relative to `max(1, |lhs|, |rhs|)` at tolerance `1e-12`.
pub fn pde_ode_consistency(
    profile: &RadialProfile,
    sig: &Signature,
    params: &SolitonParams,
    x: &PointBase,
) -> Result<ConsistencyReport> {
    const TOL: f64 = 1e-12;
    let pde = pde_residuals(profile, sig, params, x)?;
    let xs = x.coords();
    let r = sig.radial(xs);
    let ode = ode_residuals(profile, params, r)?;
    let psi = profile.psi(r).value;

    let offdiag_mismatch = pde
        .offdiag
        .iter()
        .map(|&(i, j, v)| rel_gap(v, 4.0 * sig.eps(i) * sig.eps(j) * xs[i] * xs[j] * ode[0]))
        .fold(0.0, f64::max);
    let diag_mismatch = pde
        .diag
        .iter()
        .enumerate()
        .map(|(i, &v)| rel_gap(v, sig.eps(i) * ode[1] + 4.0 * xs[i] * xs[i] * psi * ode[0]))
        .fold(0.0, f64::max);
    let fiber_mismatch = rel_gap(pde.fiber, ode[2]);

    let ode_vanishes = ode.iter().all(|v| v.abs() <= TOL);
    let pde_max_abs = pde.max_abs();
    let implication = !ode_vanishes || pde_max_abs <= TOL * (1.0 + r.abs() * psi.abs());
    let holds = offdiag_mismatch <= TOL && diag_mismatch <= TOL && fiber_mismatch <= TOL && implication;
    Ok(ConsistencyReport {
        r,
        ode,
        offdiag_mismatch,
        diag_mismatch,
        fiber_mismatch,
        ode_vanishes,
        pde_max_abs,
        holds,
    })
}

/// `count` log-spaced samples of `r` in `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
}

impl LogGrid {
    pub fn new(r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min && r_max.is_finite()) || count == 0 {
            return Err(Error::Parameter(format!(
                "grid needs 0 < r_min <= r_max and count > 0, got [{r_min}, {r_max}] x {count}"
            )));
        }
        if count == 1 && r_max != r_min {
            return Err(Error::Parameter("a single-point grid needs r_min = r_max".into()));
        }
        Ok(Self { r_min, r_max, count })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.r_min];
        }
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| match i {
                0 => self.r_min,
                i if i == self.count - 1 => self.r_max,
                i => (a + (b - a) * i as f64 / last).exp(),
            })
            .collect()
    }
}

impl fmt::Display for LogGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "log-spaced r in [{}, {}] x {}", self.r_min, self.r_max, self.count)
    }
}

/// Statistics of one equation's residual over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationStats {
    pub id: EquationId,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Sample location of the largest residual (`[r]` or base coordinates).
    pub argmax: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equations: Vec<EquationStats>,
    pub grid: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn max_abs(&self) -> f64 {
        self.equations.iter().fold(0.0, |m, e| m.max(e.max_abs))
    }

    pub fn get(&self, id: EquationId) -> Option<&EquationStats> {
        self.equations.iter().find(|e| e.id == id)
    }

    pub fn worst(&self) -> Option<&EquationStats> {
        self.equations.iter().max_by(|a, b| a.max_abs.total_cmp(&b.max_abs))
    }
}

/// Collects residual samples per equation, in insertion order.
#[derive(Debug, Default, Clone)]
pub struct ResidualAccumulator {
    stats: Vec<(EquationId, f64, f64, Vec<f64>, usize)>,
}

impl ResidualAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: EquationId, value: f64, location: &[f64]) {
        let a = value.abs();
        let entry = match self.stats.iter_mut().position(|s| s.0 == id) {
            Some(i) => &mut self.stats[i],
            None => {
                self.stats.push((id, -1.0, 0.0, Vec::new(), 0));
                self.stats.last_mut().unwrap()
            }
        };
        // NaN counts as the worst possible residual
        let a = if a.is_nan() { f64::INFINITY } else { a };
        if a > entry.1 {
            entry.1 = a;
            entry.3 = location.to_vec();
        }
        entry.2 += a;
        entry.4 += 1;
    }

    pub fn finish(self, grid: impl Into<String>, tolerance: f64) -> ResidualReport {
        let equations: Vec<EquationStats> = self
            .stats
            .into_iter()
            .map(|(id, max, sum, argmax, count)| EquationStats {
                id,
                max_abs: max.max(0.0),
                mean_abs: if count > 0 { sum / count as f64 } else { 0.0 },
                argmax,
                samples: count,
            })
            .collect();
        let pass = equations.iter().all(|e| e.max_abs < tolerance);
        ResidualReport {
            equations,
            grid: grid.into(),
            tolerance,
            pass,
        }
    }
}
