//! Radial conformal factors `ψ(r)` and potentials `h(r)`, the base signature,
//! soliton parameters and the two closed-form Schouten families.

mod radial;
mod spline;

use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use radial::{Constant, Exponential, FnRadial, Jet, LogQuadratic, PowerSum, RadialFn, Scaled};
pub use spline::CubicSpline;

pub fn ratio_to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Diagonal pseudo-Euclidean signature `(ε₁, …, εₙ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Signature(Vec<i8>);

impl Signature {
    pub fn new(eps: Vec<i8>) -> Result<Self> {
        if eps.len() < 3 {
            return Err(Error::Parameter(format!(
                "signature needs n >= 3 entries, got {}",
                eps.len()
            )));
        }
        if let Some(bad) = eps.iter().find(|&&e| e != 1 && e != -1) {
            return Err(Error::Parameter(format!("signature entries must be ±1, got {bad}")));
        }
        if !eps.contains(&1) {
            return Err(Error::Parameter("signature needs at least one +1 entry".into()));
        }
        Ok(Self(eps))
    }

    pub fn riemannian(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn eps(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn is_riemannian(&self) -> bool {
        self.0.iter().all(|&e| e == 1)
    }

    /// The quadratic invariant `r = Σ εₖ xₖ²`.
    pub fn radial(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        x.iter().zip(&self.0).map(|(xi, &e)| f64::from(e) * xi * xi).sum()
    }

    /// A point `x` with `r(x) = r > 0` and all coordinates nonzero, so every
    /// off-diagonal product `xᵢxⱼ` is active.
    pub fn lift(&self, r: f64) -> Vec<f64> {
        let plus = self.0.iter().filter(|&&e| e == 1).count() as f64;
        let minus = self.dim() as f64 - plus;
        // timelike components shrunk so that r(d) = Σ ε dᵢ² stays positive
        let t = if minus > 0.0 { 0.5 * (plus / minus).sqrt() } else { 1.0 };
        let d: Vec<f64> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let w = 1.0 + 0.01 * i as f64;
                if e == 1 {
                    w
                } else {
                    t * w
                }
            })
            .collect();
        let scale = (r / self.radial(&d)).sqrt();
        d.into_iter().map(|v| v * scale).collect()
    }
}

impl TryFrom<Vec<i8>> for Signature {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Signature> for Vec<i8> {
    fn from(s: Signature) -> Self {
        s.0
    }
}

/// Open interval `(lo, hi)` of admissible `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const POSITIVE: Interval = Interval {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Parameter(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.lo && r < self.hi
    }
}

/// `ψ` and `h` as functions of `r`, together with their validity domain.
#[derive(Clone)]
pub struct RadialProfile {
    psi: Arc<dyn RadialFn>,
    h: Arc<dyn RadialFn>,
    domain: Interval,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("psi", &self.psi)
            .field("h", &self.h)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Result of comparing analytic derivatives against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub r: f64,
    pub max_rel_error: f64,
}

impl RadialProfile {
    pub fn new(psi: Arc<dyn RadialFn>, h: Arc<dyn RadialFn>, domain: Interval) -> Self {
        Self { psi, h, domain }
    }

    /// Profile built from tabulated samples with natural cubic splines.
    pub fn tabulated(r: &[f64], psi: &[f64], h: &[f64]) -> Result<Self> {
        let psi = CubicSpline::new(r, psi)?;
        let h = CubicSpline::new(r, h)?;
        let (lo, hi) = psi.range();
        Ok(Self::new(Arc::new(psi), Arc::new(h), Interval::new(lo, hi)?))
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn psi_fn(&self) -> &Arc<dyn RadialFn> {
        &self.psi
    }

    pub fn h_fn(&self) -> &Arc<dyn RadialFn> {
        &self.h
    }

    /// Unchecked jets of `ψ` and `h`.
    pub fn psi(&self, r: f64) -> Jet {
        self.psi.jet(r)
    }

    pub fn h(&self, r: f64) -> Jet {
        self.h.jet(r)
    }

    /// Jets of `(ψ, h)` at `r` after checking the domain and `ψ > 0`.
    pub fn eval(&self, r: f64) -> Result<(Jet, Jet)> {
        if !self.domain.contains(r) {
            return Err(Error::Domain(format!(
                "r = {r} not in ({}, {})",
                self.domain.lo, self.domain.hi
            )));
        }
        let psi = self.psi.jet(r);
        if !(psi.value > 0.0) {
            return Err(Error::Positivity { r, psi: psi.value });
        }
        Ok((psi, self.h.jet(r)))
    }

    pub fn with_potential(&self, h: Arc<dyn RadialFn>) -> Self {
        Self::new(self.psi.clone(), h, self.domain)
    }

    pub fn with_domain(&self, domain: Interval) -> Self {
        Self::new(self.psi.clone(), self.h.clone(), domain)
    }

    /// Replaces `ψ` by `c·ψ`, keeping `h`.
    pub fn scaled(&self, c: f64) -> Self {
        let psi = Scaled {
            factor: c,
            inner: self.psi.clone(),
        };
        Self::new(Arc::new(psi), self.h.clone(), self.domain)
    }

    /// Compares the coded derivatives of `ψ` and `h` with fourth-order
    /// central differences at `r`. Errors are measured relative to the natural
    /// scale of each derivative (`|f′| + |f|/r` and `|f″| + |f′|/r + |f|/r²`).
    pub fn check_derivatives(&self, r: f64) -> DerivativeCheck {
        let step = 1e-3 * r.abs().max(1e-3);
        let mut worst: f64 = 0.0;
        for f in [&self.psi, &self.h] {
            let j = f.jet(r);
            let d = |g: &dyn Fn(f64) -> f64| {
                (-g(r + 2.0 * step) + 8.0 * g(r + step) - 8.0 * g(r - step) + g(r - 2.0 * step)) / (12.0 * step)
            };
            let d1 = d(&|t| f.jet(t).value);
            let d2 = d(&|t| f.jet(t).d1);
            let ra = r.abs();
            let s1 = j.d1.abs() + j.value.abs() / ra + 1e-12;
            let s2 = j.d2.abs() + j.d1.abs() / ra + j.value.abs() / (ra * ra) + 1e-12;
            worst = worst.max((j.d1 - d1).abs() / s1).max((j.d2 - d2).abs() / s2);
        }
        DerivativeCheck {
            r,
            max_rel_error: worst,
        }
    }
}

/// `(n, m, ρ, λ_F, λ̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub lambda_f: f64,
    pub lambda_tilde: f64,
}

impl SolitonParams {
    pub fn new(n: usize, m: usize, rho: f64, lambda_f: f64, lambda_tilde: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!("base dimension n = {n} < 3")));
        }
        if m < 1 {
            return Err(Error::Parameter("fiber dimension m must be >= 1".into()));
        }
        if rho == 0.0 || !rho.is_finite() {
            return Err(Error::Parameter(format!("rho must be finite and nonzero, got {rho}")));
        }
        Ok(Self {
            n,
            m,
            rho,
            lambda_f,
            lambda_tilde,
        })
    }

    pub fn schouten(n: usize, m: usize, lambda_f: f64, lambda_tilde: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!("base dimension n = {n} < 3")));
        }
        Self::new(n, m, schouten_rho(n), lambda_f, lambda_tilde)
    }

    pub fn is_schouten(&self) -> bool {
        (self.rho - schouten_rho(self.n)).abs() <= 4.0 * f64::EPSILON * self.rho.abs()
    }
}

/// `ρ = 1/(2(n−1))`.
pub fn schouten_rho(n: usize) -> f64 {
    1.0 / (2.0 * (n as f64 - 1.0))
}

pub fn schouten_rho_exact(n: usize) -> Rational64 {
    Rational64::new(1, 2 * (n as i64 - 1))
}

fn check_classification_dims(n: usize, m: usize, k2: Rational64) -> Result<()> {
    if n < 3 {
        return Err(Error::Parameter(format!("base dimension n = {n} < 3")));
    }
    if m < 2 {
        return Err(Error::Parameter(format!("fiber dimension m = {m} < 2")));
    }
    if k2 <= Rational64::from_integer(0) {
        return Err(Error::Parameter(format!("k2 must be positive, got {k2}")));
    }
    Ok(())
}

/// `λ̃ = −λ_F (m − 2n + 2) / (2(n−1))` for the `ψ = k₂ r` family.
pub fn family_a_lambda_tilde(n: usize, m: usize, lambda_f: Rational64) -> Rational64 {
    let (n, m) = (n as i64, m as i64);
    -lambda_f * Rational64::new(m - 2 * n + 2, 2 * (n - 1))
}

/// `(λ_F, λ̃) = ((n−2)k₂², −(m−n+1)(n−2)k₂² / (2(n−1)))` for the `ψ = k₂ r^{1/2}` family.
pub fn family_b_constants(n: usize, m: usize, k2: Rational64) -> (Rational64, Rational64) {
    let (n, m) = (n as i64, m as i64);
    let k2sq = k2 * k2;
    let lambda_f = k2sq * (n - 2);
    let lambda_tilde = -k2sq * Rational64::new((m - n + 1) * (n - 2), 2 * (n - 1));
    (lambda_f, lambda_tilde)
}

/// Schouten solution with `ψ = k₂ r`, `h = λ_F/(2k₂²) r⁻¹ + k₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyASolution {
    pub k2: Rational64,
    pub k1: f64,
    pub lambda_f: Rational64,
    pub lambda_tilde: Rational64,
    pub params: SolitonParams,
}

impl FamilyASolution {
    /// `λ_F = 0` leaves `h ≡ k₁`, outside the `h′ ≠ 0` hypothesis of the
    /// necessary ODE for `ψ`.
    pub fn constant_potential(&self) -> bool {
        self.lambda_f == Rational64::from_integer(0)
    }
}

/// Schouten solution with `ψ = k₂ r^{1/2}`, `h = (n−2)/8 (ln r)² + c ln r + c₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyBSolution {
    pub k2: Rational64,
    pub c: f64,
    pub c1: f64,
    pub lambda_f: Rational64,
    pub lambda_tilde: Rational64,
    pub params: SolitonParams,
}

pub fn make_family_a(
    n: usize,
    m: usize,
    lambda_f: Rational64,
    k2: Rational64,
    k1: f64,
) -> Result<(FamilyASolution, RadialProfile)> {
    check_classification_dims(n, m, k2)?;
    let lambda_tilde = family_a_lambda_tilde(n, m, lambda_f);
    let params = SolitonParams::schouten(n, m, ratio_to_f64(lambda_f), ratio_to_f64(lambda_tilde))?;
    let k = ratio_to_f64(k2);
    let psi = PowerSum::monomial(k, 1.0);
    let h = PowerSum::monomial(ratio_to_f64(lambda_f / (k2 * k2 * 2)), -1.0).with_constant(k1);
    let profile = RadialProfile::new(Arc::new(psi), Arc::new(h), Interval::POSITIVE);
    Ok((
        FamilyASolution {
            k2,
            k1,
            lambda_f,
            lambda_tilde,
            params,
        },
        profile,
    ))
}

pub fn make_family_b(n: usize, m: usize, k2: Rational64, c: f64, c1: f64) -> Result<(FamilyBSolution, RadialProfile)> {
    check_classification_dims(n, m, k2)?;
    let (lambda_f, lambda_tilde) = family_b_constants(n, m, k2);
    let params = SolitonParams::schouten(n, m, ratio_to_f64(lambda_f), ratio_to_f64(lambda_tilde))?;
    let psi = PowerSum::monomial(ratio_to_f64(k2), 0.5);
    let h = LogQuadratic {
        a: (n as f64 - 2.0) / 8.0,
        b: c,
        c: c1,
    };
    let profile = RadialProfile::new(Arc::new(psi), Arc::new(h), Interval::POSITIVE);
    Ok((
        FamilyBSolution {
            k2,
            c,
            c1,
            lambda_f,
            lambda_tilde,
            params,
        },
        profile,
    ))
}

/// Potential attached to a power-law profile.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Zero,
    Explicit(Arc<dyn RadialFn>),
}

/// `ψ = k r^s` on `r > 0` with the given potential.
pub fn make_power_profile(k: f64, s: f64, h: PotentialSpec) -> Result<RadialProfile> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Parameter(format!("amplitude k must be positive, got {k}")));
    }
    if !s.is_finite() {
        return Err(Error::Parameter(format!("exponent s must be finite, got {s}")));
    }
    let h: Arc<dyn RadialFn> = match h {
        PotentialSpec::Zero => Arc::new(Constant(0.0)),
        PotentialSpec::Explicit(f) => f,
    };
    Ok(RadialProfile::new(
        Arc::new(PowerSum::monomial(k, s)),
        h,
        Interval::POSITIVE,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn log_points(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
        let (a, b) = (lo.ln(), hi.ln());
        (0..count).map(move |i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
    }

    #[test]
    fn signature_validation() {
        assert!(Signature::new(vec![1, -1]).is_err());
        assert!(Signature::new(vec![-1, -1, -1]).is_err());
        assert!(Signature::new(vec![1, 0, 1]).is_err());
        let s = Signature::new(vec![1, -1, -1, 1]).unwrap();
        assert!(!s.is_riemannian());
        assert_eq!(s.radial(&[1.0, 2.0, 1.0, 3.0]), 1.0 - 4.0 - 1.0 + 9.0);
    }

    #[test]
    fn lift_hits_requested_radius_with_nonzero_coordinates() {
        for eps in [vec![1, 1, 1], vec![1, -1, 1, -1], vec![1, -1, -1, -1, -1]] {
            let s = Signature::new(eps).unwrap();
            for r in [0.01, 1.0, 50.0] {
                let x = s.lift(r);
                assert_abs_diff_eq!(s.radial(&x), r, epsilon = 1e-12 * r.max(1.0));
                assert!(x.iter().all(|v| *v != 0.0));
            }
        }
    }

    #[test]
    fn family_a_examples() {
        let (a, p) = make_family_a(3, 2, q(3, 1), q(1, 1), 0.0).unwrap();
        assert_eq!(a.lambda_tilde, q(3, 2));
        assert_abs_diff_eq!(p.h(2.0).value, 3.0 / 4.0, epsilon = 1e-15);
        assert_eq!(p.psi(2.0), Jet::new(2.0, 1.0, 0.0));

        let (a, p) = make_family_a(3, 2, q(0, 1), q(1, 1), 5.0).unwrap();
        assert_eq!(a.lambda_tilde, q(0, 1));
        assert!(a.constant_potential());
        assert_eq!(p.h(0.7), Jet::new(5.0, 0.0, 0.0));

        let (a, _) = make_family_a(4, 2, q(6, 1), q(1, 1), 0.0).unwrap();
        assert_eq!(a.lambda_tilde, q(4, 1));
    }

    #[test]
    fn family_b_examples() {
        let (b, _) = make_family_b(3, 4, q(1, 1), 0.0, 0.0).unwrap();
        assert_eq!((b.lambda_f, b.lambda_tilde), (q(1, 1), q(-1, 2)));
        for n in 3..9 {
            let (b, _) = make_family_b(n, n - 1, q(1, 1), 0.0, 0.0).unwrap();
            assert_eq!(b.lambda_tilde, q(0, 1));
        }
        let (b, _) = make_family_b(4, 2, q(1, 1), 0.0, 0.0).unwrap();
        assert_eq!((b.lambda_f, b.lambda_tilde), (q(2, 1), q(1, 3)));
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(make_family_a(2, 2, q(1, 1), q(1, 1), 0.0).is_err());
        assert!(make_family_a(3, 1, q(1, 1), q(1, 1), 0.0).is_err());
        assert!(make_family_a(3, 2, q(1, 1), q(0, 1), 0.0).is_err());
        assert!(make_family_b(3, 2, q(-1, 2), 0.0, 0.0).is_err());
        assert!(make_power_profile(0.0, 1.0, PotentialSpec::Zero).is_err());
        assert!(SolitonParams::new(3, 2, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn power_profile_examples() {
        let p = make_power_profile(1.0, 0.0, PotentialSpec::Zero).unwrap();
        assert_eq!(p.psi(3.3), Jet::new(1.0, 0.0, 0.0));
        assert_eq!(p.h(3.3), Jet::constant(0.0));
        let p = make_power_profile(1.0, 0.5, PotentialSpec::Zero).unwrap();
        assert_eq!(p.psi(4.0).value, 2.0);
        assert_eq!(p.psi(4.0).d1, 0.25);
        let p = make_power_profile(2.0, 1.0, PotentialSpec::Zero).unwrap();
        assert_eq!(p.psi(3.0).value, 6.0);
        assert_eq!(p.psi(3.0).d2, 0.0);
    }

    #[test]
    fn eval_enforces_domain_and_positivity() {
        let (_, p) = make_family_b(3, 2, q(1, 1), 0.0, 0.0).unwrap();
        assert!(matches!(p.eval(-1.0), Err(Error::Domain(_))));
        assert!(matches!(p.eval(0.0), Err(Error::Domain(_))));
        let neg = RadialProfile::new(
            Arc::new(PowerSum::monomial(-1.0, 1.0)),
            Arc::new(Constant(0.0)),
            Interval::POSITIVE,
        );
        assert!(matches!(neg.eval(1.0), Err(Error::Positivity { .. })));
    }

    #[test]
    fn family_profiles_pass_derivative_consistency() {
        for (n, m) in [(3, 2), (4, 3), (6, 5)] {
            let (_, a) = make_family_a(n, m, q(3, 1), q(1, 2), 0.4).unwrap();
            let (_, b) = make_family_b(n, m, q(2, 1), -0.7, 1.1).unwrap();
            for r in log_points(1e-2, 1e2, 100) {
                assert!(a.check_derivatives(r).max_rel_error < 1e-6, "A at r={r}");
                assert!(b.check_derivatives(r).max_rel_error < 1e-6, "B at r={r}");
            }
        }
    }

    #[test]
    fn signature_serde_validates() {
        let s: Signature = serde_json::from_str("[1,-1,1]").unwrap();
        assert_eq!(s.dim(), 3);
        assert!(serde_json::from_str::<Signature>("[-1,-1,-1]").is_err());
    }

    proptest::proptest! {
        #[test]
        fn family_b_sign_law(n in 3usize..12, m in 2usize..14, num in 1i64..6, den in 1i64..6) {
            let k2 = Rational64::new(num, den);
            let (b, _) = make_family_b(n, m, k2, 0.0, 0.0).unwrap();
            let zero = Rational64::from_integer(0);
            proptest::prop_assert!(b.lambda_f > zero);
            let expected = (n as i64 - 1 - m as i64).signum();
            let got = if b.lambda_tilde > zero { 1 } else if b.lambda_tilde < zero { -1 } else { 0 };
            proptest::prop_assert_eq!(got, expected);
        }
    }
}
