//! Schouten classification: the two radial families, the worked product
//! examples and a curvature-level certificate for the cylinder base.

use std::fmt;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::PointBase;
use crate::error::{Error, Result};
use crate::oracle::base_chart;
use crate::oracle::{scalar_numeric, sectional_many, FdConfig, FiberChart};
use crate::profiles::{make_family_a, make_family_b, ratio_to_f64, RadialProfile, Signature, SolitonParams};
use crate::systems::{
    ode_residuals, pde_residuals, schouten_residuals, EquationId, LogGrid, ResidualAccumulator, ResidualReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// `ψ = k₂ r`, `h = λ_F/(2k₂² r) + k₁`
    A,
    /// `ψ = k₂ r^{1/2}`, `h = (n−2)/8 (ln r)² + c ln r + c₁`
    B,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::A => "A",
            Family::B => "B",
            Family::Custom => "custom",
        })
    }
}

/// Label by the sign of `λ̃`: positive shrinks, zero is steady, negative expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonType {
    Shrinking,
    Steady,
    Expanding,
}

impl SolitonType {
    pub fn from_lambda(lambda_tilde: f64) -> Self {
        if lambda_tilde > 0.0 {
            Self::Shrinking
        } else if lambda_tilde < 0.0 {
            Self::Expanding
        } else {
            Self::Steady
        }
    }

    pub fn from_exact(lambda_tilde: Rational64) -> Self {
        Self::from_lambda(ratio_to_f64(lambda_tilde))
    }
}

impl fmt::Display for SolitonType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Shrinking => "shrinking",
            Self::Steady => "steady",
            Self::Expanding => "expanding",
        })
    }
}

/// A candidate soliton: profile, signature and constants.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionDescriptor {
    pub family: Family,
    pub params: SolitonParams,
    #[serde(skip)]
    pub profile: RadialProfile,
    pub signature: Signature,
    pub k2: Option<Rational64>,
    pub lambda_f_exact: Option<Rational64>,
    pub lambda_tilde_exact: Option<Rational64>,
    /// `h` is constant, so the `h′ ≠ 0` hypothesis of the necessary ODE fails.
    pub constant_potential: bool,
}

impl SolutionDescriptor {
    pub fn custom(profile: RadialProfile, signature: Signature, params: SolitonParams) -> Result<Self> {
        if signature.dim() != params.n {
            return Err(Error::Parameter(format!(
                "signature dimension {} differs from n = {}",
                signature.dim(),
                params.n
            )));
        }
        Ok(Self {
            family: Family::Custom,
            params,
            profile,
            signature,
            k2: None,
            lambda_f_exact: None,
            lambda_tilde_exact: None,
            constant_potential: false,
        })
    }

    pub fn soliton_type(&self) -> SolitonType {
        match self.lambda_tilde_exact {
            Some(q) => SolitonType::from_exact(q),
            None => SolitonType::from_lambda(self.params.lambda_tilde),
        }
    }

    /// Same profile with `λ̃` replaced; the exact value is dropped.
    pub fn with_lambda_tilde(&self, lambda_tilde: f64) -> Self {
        let mut out = self.clone();
        out.params.lambda_tilde = lambda_tilde;
        out.lambda_tilde_exact = None;
        out
    }

    pub fn with_lambda_f(&self, lambda_f: f64) -> Self {
        let mut out = self.clone();
        out.params.lambda_f = lambda_f;
        out.lambda_f_exact = None;
        out
    }

    pub fn with_signature(&self, signature: Signature) -> Result<Self> {
        if signature.dim() != self.params.n {
            return Err(Error::Parameter(format!(
                "signature dimension {} differs from n = {}",
                signature.dim(),
                self.params.n
            )));
        }
        let mut out = self.clone();
        out.signature = signature;
        Ok(out)
    }

    fn family_a(n: usize, m: usize, lambda_f: Rational64, k2: Rational64) -> Result<Self> {
        let (sol, profile) = make_family_a(n, m, lambda_f, k2, 0.0)?;
        Ok(Self {
            family: Family::A,
            params: sol.params,
            profile,
            signature: Signature::riemannian(n)?,
            k2: Some(k2),
            lambda_f_exact: Some(sol.lambda_f),
            lambda_tilde_exact: Some(sol.lambda_tilde),
            constant_potential: sol.constant_potential(),
        })
    }

    fn family_b(n: usize, m: usize, k2: Rational64) -> Result<Self> {
        let (sol, profile) = make_family_b(n, m, k2, 0.0, 0.0)?;
        Ok(Self {
            family: Family::B,
            params: sol.params,
            profile,
            signature: Signature::riemannian(n)?,
            k2: Some(k2),
            lambda_f_exact: Some(sol.lambda_f),
            lambda_tilde_exact: Some(sol.lambda_tilde),
            constant_potential: false,
        })
    }
}

/// Family B descriptor, or a constraint error when the supplied `λ_F`
/// differs from the forced `(n−2)k₂²`.
pub fn require_family_b(
    n: usize,
    m: usize,
    lambda_f: Option<Rational64>,
    k2: Rational64,
) -> Result<SolutionDescriptor> {
    let desc = SolutionDescriptor::family_b(n, m, k2)?;
    if let (Some(given), Some(forced)) = (lambda_f, desc.lambda_f_exact) {
        if given != forced {
            return Err(Error::Constraint(format!(
                "psi = k2 r^(1/2) forces lambda_F = (n-2) k2^2 = {forced}, got {given}"
            )));
        }
    }
    Ok(desc)
}

/// All radial Schouten solitons with amplitude `k₂` on the Riemannian base.
///
/// Family A needs `λ_F` and is returned when it is given. Family B is
/// returned when `λ_F` is absent or equals `(n−2)k₂²`.
pub fn classify_schouten(
    n: usize,
    m: usize,
    lambda_f: Option<Rational64>,
    k2: Rational64,
) -> Result<Vec<SolutionDescriptor>> {
    let mut out = Vec::with_capacity(2);
    if let Some(lf) = lambda_f {
        out.push(SolutionDescriptor::family_a(n, m, lf, k2)?);
    }
    match require_family_b(n, m, lambda_f, k2) {
        Ok(d) => out.push(d),
        Err(Error::Constraint(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// `r`, radial residuals, off-diagonal PDE, diagonal and fiber PDE, lifted point.
type GridRow = (f64, [f64; 3], Vec<f64>, Vec<f64>, Vec<f64>);

/// Evaluates the radial system on `grid` (Schouten form when `ρ = 1/(2(n−1))`)
/// and the coordinate PDE system at one lifted point per grid value.
pub fn verify_solution(desc: &SolutionDescriptor, grid: &LogGrid, tolerance: f64) -> Result<ResidualReport> {
    let schouten = desc.params.is_schouten();
    let ids = if schouten {
        [EquationId::R18, EquationId::R19, EquationId::R20]
    } else {
        [EquationId::R15, EquationId::R16, EquationId::R17]
    };
    let rows: Vec<GridRow> = grid
        .points()
        .into_par_iter()
        .map(|r| {
            let ode = if schouten {
                schouten_residuals(&desc.profile, &desc.params, r)?
            } else {
                ode_residuals(&desc.profile, &desc.params, r)?
            };
            let x = PointBase::new(desc.signature.lift(r));
            let pde = pde_residuals(&desc.profile, &desc.signature, &desc.params, &x)?;
            let off = pde.offdiag.iter().map(|t| t.2).collect();
            let mut diag = pde.diag;
            diag.push(pde.fiber);
            Ok((r, ode, off, diag, x.0))
        })
        .collect::<Result<_>>()?;

    let mut acc = ResidualAccumulator::new();
    for (r, ode, _, _, _) in &rows {
        for (id, v) in ids.iter().zip(ode) {
            acc.push(*id, *v, &[*r]);
        }
    }
    for (_, _, off, diag, x) in &rows {
        for v in off {
            acc.push(EquationId::Pde1, *v, x);
        }
        let (fiber, diag) = diag.split_last().expect("fiber residual present");
        for v in diag {
            acc.push(EquationId::Pde2, *v, x);
        }
        acc.push(EquationId::Pde3, *fiber, x);
    }
    Ok(acc.finish(grid.to_string(), tolerance))
}

/// One of the three worked product examples.
#[derive(Debug, Clone, Serialize)]
pub struct PaperExample {
    pub id: u8,
    /// `(S^{n−1} × ℝ) × F` in words.
    pub manifold: String,
    pub n: usize,
    pub m: usize,
    pub lambda_f: Rational64,
    pub lambda_tilde: Rational64,
    pub soliton_type: SolitonType,
    pub descriptor: SolutionDescriptor,
    #[serde(skip)]
    pub fiber: FiberChart,
}

fn example(id: u8, manifold: String, n: usize, m: usize, fiber: FiberChart) -> Result<PaperExample> {
    let descriptor = require_family_b(n, m, None, Rational64::from_integer(1))?;
    let lambda_f = descriptor.lambda_f_exact.expect("family B is exact");
    let lambda_tilde = descriptor.lambda_tilde_exact.expect("family B is exact");
    if (fiber.lambda_f() - ratio_to_f64(lambda_f)).abs() > 1e-12 {
        return Err(Error::Constraint(format!(
            "fiber Einstein constant {} differs from lambda_F = {lambda_f}",
            fiber.lambda_f()
        )));
    }
    Ok(PaperExample {
        id,
        manifold,
        n,
        m,
        lambda_f,
        lambda_tilde,
        soliton_type: SolitonType::from_exact(lambda_tilde),
        descriptor,
        fiber,
    })
}

/// The expanding, steady and shrinking examples; the steady one uses
/// `m = n − 1` with the given `n` (4 by convention).
pub fn paper_examples(n_example2: usize) -> Result<Vec<PaperExample>> {
    if n_example2 < 3 {
        return Err(Error::Parameter(format!("example 2 needs n >= 3, got {n_example2}")));
    }
    let n2 = n_example2;
    let s2 = || FiberChart::round_sphere(2, 1.0);
    Ok(vec![
        example(
            1,
            "(S^2 x R) x (S^2 x S^2)".into(),
            3,
            4,
            FiberChart::product(s2()?, s2()?)?,
        )?,
        example(
            2,
            format!("(S^{} x R) x S^{}", n2 - 1, n2 - 1),
            n2,
            n2 - 1,
            FiberChart::round_sphere(n2 - 1, 1.0)?,
        )?,
        example(
            3,
            "(S^3 x R) x S^2_R, R = sqrt(2)/2".into(),
            4,
            2,
            FiberChart::round_sphere(2, std::f64::consts::FRAC_1_SQRT_2)?,
        )?,
    ])
}

/// Curvature evidence that `δ/(k₂² r)` on `ℝⁿ∖{0}` is the cylinder
/// `ℝ × S^{n−1}(1/k₂)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderCertificate {
    pub n: usize,
    pub k2: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub points: usize,
    pub spherical_planes: usize,
    pub radial_planes: usize,
    pub spherical_expected: f64,
    pub spherical_max_dev: f64,
    pub radial_max_dev: f64,
    pub scalar_expected: f64,
    pub scalar_max_dev: f64,
    /// `λ_F = (n−2)k₂²`, the positive Ricci bound handed to Bonnet–Myers.
    pub lambda_f: f64,
    pub bonnet_myers_hypothesis: bool,
    pub scope: String,
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

/// Random unit vector Euclidean-orthogonal to `x` (and to `extra`, if given).
fn tangent(rng: &mut ChaCha8Rng, x: &[f64], extra: Option<&[f64]>) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for w in std::iter::once(x).chain(extra) {
            let w = unit(w.to_vec());
            let d: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(&w).for_each(|(a, b)| *a -= d * b);
        }
        if v.iter().map(|a| a * a).sum::<f64>() > 1e-6 {
            return unit(v);
        }
    }
}

/// Samples 20 seeded points with two spherical and two radial planes each
/// and checks the oracle curvatures against the cylinder values.
pub fn certify_cylinder(n: usize, k2: f64, tolerance: f64, seed: u64) -> Result<CylinderCertificate> {
    const POINTS: usize = 20;
    if n < 3 {
        return Err(Error::Parameter(format!("base dimension n = {n} < 3")));
    }
    if !(k2 > 0.0) || !k2.is_finite() {
        return Err(Error::Parameter(format!("k2 must be positive, got {k2}")));
    }
    let sig = Signature::riemannian(n)?;
    let profile = crate::profiles::make_power_profile(k2, 0.5, crate::profiles::PotentialSpec::Zero)?;
    let chart = base_chart(&profile, &sig);
    let fd = FdConfig::default();
    let nf = n as f64;
    let k2sq = k2 * k2;
    let scalar_expected = (nf - 1.0) * (nf - 2.0) * k2sq;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sph_dev, mut rad_dev, mut scal_dev) = (0.0f64, 0.0f64, 0.0f64);
    let mut worst = (0.0, String::new());
    let mut note = |dev: f64, what: String| {
        if !(dev <= worst.0) {
            worst = (dev, what);
        }
    };
    for _ in 0..POINTS {
        let radius = rng.gen_range(0.5..2.0);
        let x: Vec<f64> = unit((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .into_iter()
            .map(|a| a * radius)
            .collect();
        let mut planes = Vec::with_capacity(4);
        for _ in 0..2 {
            let u = tangent(&mut rng, &x, None);
            let v = tangent(&mut rng, &x, Some(&u));
            planes.push((u, v));
        }
        for _ in 0..2 {
            let v = tangent(&mut rng, &x, None);
            planes.push((x.clone(), v));
        }
        let k = sectional_many(&chart, &x, &planes, &fd)?;
        for (i, val) in k.iter().enumerate() {
            if i < 2 {
                let d = (val - k2sq).abs();
                sph_dev = sph_dev.max(d);
                note(d, format!("spherical plane at {x:?}: K = {val}, expected {k2sq}"));
            } else {
                let d = val.abs();
                rad_dev = rad_dev.max(d);
                note(d, format!("radial plane at {x:?}: K = {val}, expected 0"));
            }
        }
        let s = scalar_numeric(&chart, &x, &fd)?;
        let d = (s - scalar_expected).abs();
        scal_dev = scal_dev.max(d);
        note(d, format!("scalar at {x:?}: {s}, expected {scalar_expected}"));
    }
    if !(worst.0 <= tolerance) {
        return Err(Error::Certification(format!(
            "deviation {:.3e} exceeds {tolerance:.1e}; worst: {}",
            worst.0, worst.1
        )));
    }
    let lambda_f = (nf - 2.0) * k2sq;
    Ok(CylinderCertificate {
        n,
        k2,
        seed,
        tolerance,
        points: POINTS,
        spherical_planes: 2 * POINTS,
        radial_planes: 2 * POINTS,
        spherical_expected: k2sq,
        spherical_max_dev: sph_dev,
        radial_max_dev: rad_dev,
        scalar_expected,
        scalar_max_dev: scal_dev,
        lambda_f,
        bonnet_myers_hypothesis: lambda_f > 0.0,
        scope: format!(
            "local: sectional curvatures ({k2sq} on spheres, 0 on radial planes) and scalar curvature \
             match R x S^{}(1/k2) at sampled points; global isometry and fiber compactness are not checked",
            n - 1
        ),
    })
}
