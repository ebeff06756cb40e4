//! Closed-form curvature of `g̃ = g/ψ² + g_F` for radial `ψ`, in coordinates
//! of the base.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{Jet, RadialProfile, Signature, SolitonParams};

/// A point `(x₁, …, xₙ)` of the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointBase(pub Vec<f64>);

impl PointBase {
    pub fn new(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for PointBase {
    fn from(x: Vec<f64>) -> Self {
        Self(x)
    }
}

/// Coordinate gradient and Hessian of a radial function `f(r(x))`:
/// `f_{,i} = 2εᵢxᵢ f′`, `f_{,ij} = 4εᵢεⱼxᵢxⱼ f″ + 2εᵢδᵢⱼ f′`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPartials {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

impl RadialPartials {
    pub fn new(jet: Jet, sig: &Signature, x: &[f64]) -> Self {
        let n = sig.dim();
        let grad = (0..n).map(|i| 2.0 * sig.eps(i) * x[i] * jet.d1).collect();
        let hess = DMatrix::from_fn(n, n, |i, j| {
            let mut v = 4.0 * sig.eps(i) * sig.eps(j) * x[i] * x[j] * jet.d2;
            if i == j {
                v += 2.0 * sig.eps(i) * jet.d1;
            }
            v
        });
        Self {
            value: jet.value,
            grad,
            hess,
        }
    }
}

/// Partials of `ψ` and `h` at a checked base point.
pub(crate) struct PointData {
    pub psi: RadialPartials,
    pub h: RadialPartials,
}

pub(crate) fn point_data(profile: &RadialProfile, sig: &Signature, x: &PointBase) -> Result<PointData> {
    let xs = x.coords();
    if xs.len() != sig.dim() {
        return Err(Error::Parameter(format!(
            "point has {} coordinates, signature has {}",
            xs.len(),
            sig.dim()
        )));
    }
    let (psi, h) = profile.eval(sig.radial(xs))?;
    Ok(PointData {
        psi: RadialPartials::new(psi, sig, xs),
        h: RadialPartials::new(h, sig, xs),
    })
}

/// Base block of `Ric_g̃` plus the factor `λ_F` multiplying `g_F` on the
/// fiber block. The mixed block vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciBlocks {
    pub base: DMatrix<f64>,
    pub fiber_factor: f64,
}

fn ricci_from_partials(psi: &RadialPartials, sig: &Signature) -> DMatrix<f64> {
    let n = sig.dim();
    let nf = n as f64;
    let p = psi.value;
    let lap: f64 = (0..n).map(|k| sig.eps(k) * psi.hess[(k, k)]).sum();
    let grad_sq: f64 = (0..n).map(|k| sig.eps(k) * psi.grad[k] * psi.grad[k]).sum();
    DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            (nf - 2.0) * psi.hess[(i, j)] / p
        } else {
            ((nf - 2.0) * psi.hess[(i, i)] + sig.eps(i) * lap) / p - (nf - 1.0) * sig.eps(i) * grad_sq / (p * p)
        }
    })
}

pub fn ricci_closed_form(
    profile: &RadialProfile,
    sig: &Signature,
    params: &SolitonParams,
    x: &PointBase,
) -> Result<RicciBlocks> {
    let data = point_data(profile, sig, x)?;
    Ok(RicciBlocks {
        base: ricci_from_partials(&data.psi, sig),
        fiber_factor: params.lambda_f,
    })
}

fn hessian_from_partials(psi: &RadialPartials, h: &RadialPartials, sig: &Signature) -> DMatrix<f64> {
    let n = sig.dim();
    let p = psi.value;
    let cross: f64 = (0..n).map(|k| sig.eps(k) * psi.grad[k] * h.grad[k]).sum();
    DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            h.hess[(i, j)] + (psi.grad[j] * h.grad[i] + psi.grad[i] * h.grad[j]) / p
        } else {
            h.hess[(i, i)] + 2.0 * psi.grad[i] * h.grad[i] / p - sig.eps(i) * cross / p
        }
    })
}

/// Coordinate components of `Hess_g̃ h` on base lifts.
pub fn hessian_closed_form(profile: &RadialProfile, x: &PointBase, sig: &Signature) -> Result<DMatrix<f64>> {
    let data = point_data(profile, sig, x)?;
    Ok(hessian_from_partials(&data.psi, &data.h, sig))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCurvatures {
    pub base: f64,
    pub fiber: f64,
    pub total: f64,
}

fn base_scalar(psi: &RadialPartials, sig: &Signature) -> f64 {
    let nf = sig.dim() as f64;
    (0..sig.dim())
        .map(|k| {
            sig.eps(k) * (2.0 * (nf - 1.0) * psi.value * psi.hess[(k, k)] - (nf - 1.0) * nf * psi.grad[k] * psi.grad[k])
        })
        .sum()
}

/// `K_{g*}`, `K_F = λ_F m` and their sum.
pub fn scalar_curvature(
    profile: &RadialProfile,
    sig: &Signature,
    params: &SolitonParams,
    x: &PointBase,
) -> Result<ScalarCurvatures> {
    let data = point_data(profile, sig, x)?;
    let base = base_scalar(&data.psi, sig);
    let fiber = params.lambda_f * params.m as f64;
    Ok(ScalarCurvatures {
        base,
        fiber,
        total: base + fiber,
    })
}

/// Everything the closed forms give at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub point: PointBase,
    pub psi: f64,
    pub ric_base: DMatrix<f64>,
    pub ric_mixed_zero: bool,
    pub ric_fiber_factor: f64,
    pub hess_base: DMatrix<f64>,
    pub k_base: f64,
    pub k_fiber: f64,
    pub k_total: f64,
}

impl CurvatureReport {
    /// Components in the `g*`-orthonormal frame `eᵢ = ψ ∂ᵢ`.
    pub fn to_orthonormal_frame(&self) -> CurvatureReport {
        let s = self.psi * self.psi;
        CurvatureReport {
            ric_base: &self.ric_base * s,
            hess_base: &self.hess_base * s,
            ..self.clone()
        }
    }
}

pub fn curvature_report(
    profile: &RadialProfile,
    sig: &Signature,
    params: &SolitonParams,
    x: &PointBase,
) -> Result<CurvatureReport> {
    let data = point_data(profile, sig, x)?;
    let k_base = base_scalar(&data.psi, sig);
    let k_fiber = params.lambda_f * params.m as f64;
    Ok(CurvatureReport {
        point: x.clone(),
        psi: data.psi.value,
        ric_base: ricci_from_partials(&data.psi, sig),
        ric_mixed_zero: true,
        ric_fiber_factor: params.lambda_f,
        hess_base: hessian_from_partials(&data.psi, &data.h, sig),
        k_base,
        k_fiber,
        k_total: k_base + k_fiber,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{
        make_family_b, make_power_profile, Constant, Exponential, Interval, PotentialSpec, PowerSum,
    };
    use approx::assert_abs_diff_eq;
    use num_rational::Rational64;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn params(n: usize, m: usize, lambda_f: f64) -> SolitonParams {
        SolitonParams::schouten(n, m, lambda_f, 0.0).unwrap()
    }

    #[test]
    fn flat_base_has_zero_ricci() {
        let p = make_power_profile(1.0, 0.0, PotentialSpec::Zero).unwrap();
        for eps in [vec![1, 1, 1], vec![1, -1, 1, -1]] {
            let sig = Signature::new(eps).unwrap();
            let x = PointBase(sig.lift(2.0));
            let ric = ricci_closed_form(&p, &sig, &params(sig.dim(), 2, 0.0), &x).unwrap();
            assert!(ric.base.iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn trace_identity_for_linear_psi() {
        // ψ = r, n = 3, x = (1,0,0): ψ = 1, ψ′ = 1, ψ″ = 0.
        // ψ_{,11} = 2, ψ_{,22} = ψ_{,33} = 2, ψ_{,1} = 2.
        // Ric₁₁ = (1·2 + 6)/1 − 2·4 = 0, Ric₂₂ = (2 + 6) − 8 = 0.
        let p = make_power_profile(1.0, 1.0, PotentialSpec::Zero).unwrap();
        let sig = Signature::riemannian(3).unwrap();
        let x = PointBase(vec![1.0, 0.0, 0.0]);
        let ric = ricci_closed_form(&p, &sig, &params(3, 2, 0.0), &x).unwrap();
        assert_abs_diff_eq!(ric.base[(0, 0)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ric.base[(1, 1)], 0.0, epsilon = 1e-14);
        // K* = ψ² Σ g^{ii} Ric_ii must agree with the direct scalar sum.
        let k = scalar_curvature(&p, &sig, &params(3, 2, 0.0), &x).unwrap();
        let psi_sq = p.psi(1.0).value.powi(2);
        let trace: f64 = psi_sq * (0..3).map(|i| ric.base[(i, i)]).sum::<f64>();
        assert_abs_diff_eq!(k.base, trace, epsilon = 1e-14);
    }

    #[test]
    fn constant_potential_has_zero_hessian() {
        let p = make_power_profile(1.0, 0.5, PotentialSpec::Explicit(Arc::new(Constant(3.0)))).unwrap();
        let sig = Signature::riemannian(4).unwrap();
        let h = hessian_closed_form(&p, &PointBase(vec![0.3, 1.0, -0.2, 0.5]), &sig).unwrap();
        assert!(h.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn euclidean_hessian_of_r_is_twice_identity() {
        let p = make_power_profile(
            1.0,
            0.0,
            PotentialSpec::Explicit(Arc::new(PowerSum::monomial(1.0, 1.0))),
        )
        .unwrap();
        let sig = Signature::riemannian(3).unwrap();
        let h = hessian_closed_form(&p, &PointBase(vec![0.4, -1.2, 2.0]), &sig).unwrap();
        assert_abs_diff_eq!(h, DMatrix::identity(3, 3) * 2.0, epsilon = 1e-14);
    }

    #[test]
    fn scalar_curvature_of_cylinder_profile() {
        let p = make_power_profile(1.0, 0.5, PotentialSpec::Zero).unwrap();
        let sig = Signature::riemannian(3).unwrap();
        for x in [vec![1.0, 0.0, 0.0], vec![0.3, -0.7, 1.9], vec![5.0, 5.0, 5.0]] {
            let k = scalar_curvature(&p, &sig, &params(3, 4, 1.0), &PointBase(x)).unwrap();
            assert_abs_diff_eq!(k.base, 2.0, epsilon = 1e-12);
        }
        let flat = make_power_profile(1.0, 0.0, PotentialSpec::Zero).unwrap();
        let k = scalar_curvature(&flat, &sig, &params(3, 2, 0.0), &PointBase(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(k.total, 0.0);
    }

    #[test]
    fn example_one_total_scalar() {
        let (b, p) = make_family_b(3, 4, Rational64::from_integer(1), 0.0, 0.0).unwrap();
        let sig = Signature::riemannian(3).unwrap();
        let k = scalar_curvature(&p, &sig, &b.params, &PointBase(vec![1.0, 1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(k.base, 2.0, epsilon = 1e-12);
        assert_eq!(k.fiber, 4.0);
        assert_abs_diff_eq!(k.total, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn domain_and_positivity_errors() {
        let (b, p) = make_family_b(3, 4, Rational64::from_integer(1), 0.0, 0.0).unwrap();
        let sig = Signature::riemannian(3).unwrap();
        let origin = PointBase(vec![0.0; 3]);
        assert!(matches!(
            ricci_closed_form(&p, &sig, &b.params, &origin),
            Err(Error::Domain(_))
        ));
        let neg = RadialProfile::new(
            Arc::new(PowerSum::monomial(1.0, 1.0).with_constant(-5.0)),
            Arc::new(Constant(0.0)),
            Interval::POSITIVE,
        );
        assert!(matches!(
            scalar_curvature(&neg, &sig, &b.params, &PointBase(vec![1.0, 0.0, 0.0])),
            Err(Error::Positivity { .. })
        ));
    }

    #[test]
    fn orthonormal_frame_scales_by_psi_squared() {
        let (b, p) = make_family_b(3, 4, Rational64::from_integer(2), 0.0, 0.0).unwrap();
        let sig = Signature::riemannian(3).unwrap();
        let rep = curvature_report(&p, &sig, &b.params, &PointBase(vec![0.5, 0.2, 0.1])).unwrap();
        let on = rep.to_orthonormal_frame();
        let s = rep.psi * rep.psi;
        assert_abs_diff_eq!(on.ric_base[(0, 1)], rep.ric_base[(0, 1)] * s, epsilon = 1e-14);
        assert_eq!(on.k_total, rep.k_total);
    }

    #[test]
    fn symmetric_points_give_permutation_invariant_ricci() {
        let (b, p) = make_family_b(4, 2, Rational64::from_integer(1), 0.3, 0.0).unwrap();
        let sig = Signature::riemannian(4).unwrap();
        let x = PointBase(vec![0.7, 0.7, 0.0, 0.2]);
        let ric = ricci_closed_form(&p, &sig, &b.params, &x).unwrap();
        assert_abs_diff_eq!(ric.base[(0, 0)], ric.base[(1, 1)], epsilon = 1e-14);
        assert_abs_diff_eq!(ric.base[(0, 3)], ric.base[(1, 3)], epsilon = 1e-14);
        let hess = hessian_closed_form(&p, &x, &sig).unwrap();
        assert_abs_diff_eq!(hess[(0, 0)], hess[(1, 1)], epsilon = 1e-14);
    }

    fn random_profile() -> impl Strategy<Value = RadialProfile> {
        (0.2f64..3.0, 0.2f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(k, s, a, b)| {
            let psi = PowerSum::monomial(k, s).with_constant(0.1);
            let h = PowerSum::monomial(a, 1.0).plus(b, -1.0);
            RadialProfile::new(Arc::new(psi), Arc::new(h), Interval::POSITIVE)
        })
    }

    fn signature() -> impl Strategy<Value = Signature> {
        (3usize..6, 0usize..3).prop_map(|(n, neg)| {
            let mut eps = vec![1i8; n];
            for e in eps.iter_mut().skip(n - neg.min(n - 1)) {
                *e = -1;
            }
            Signature::new(eps).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn outputs_are_symmetric(p in random_profile(), sig in signature(),
                                 coords in proptest::collection::vec(-2.0f64..2.0, 6),
                                 r in 0.05f64..5.0) {
            let n = sig.dim();
            let mut x: Vec<f64> = coords[..n].to_vec();
            if sig.radial(&x) < 1e-3 {
                x = sig.lift(r);
            }
            let x = PointBase(x);
            let params = SolitonParams::schouten(n, 2, 1.0, 0.0).unwrap();
            let rep = curvature_report(&p, &sig, &params, &x).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((rep.ric_base[(i, j)] - rep.ric_base[(j, i)]).abs() <= 1e-12);
                    prop_assert!((rep.hess_base[(i, j)] - rep.hess_base[(j, i)]).abs() <= 1e-12);
                }
            }
            prop_assert_eq!(rep.k_total, rep.k_base + rep.k_fiber);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn constant_scaling(c in 0.1f64..10.0, coords in proptest::collection::vec(0.1f64..2.0, 3),
                            a in 0.2f64..2.0, b in -1.0f64..1.0) {
            let psi = PowerSum::monomial(a, 0.5).plus(b.abs() + 0.1, 2.0);
            let p = RadialProfile::new(Arc::new(psi), Arc::new(Exponential { a: 1.0, b }), Interval::POSITIVE);
            let sig = Signature::riemannian(3).unwrap();
            let x = PointBase(coords);
            let params = SolitonParams::schouten(3, 2, 0.0, 0.0).unwrap();
            let base = curvature_report(&p, &sig, &params, &x).unwrap();
            let scaled = curvature_report(&p.scaled(c), &sig, &params, &x).unwrap();
            let tol = 1e-10 * (1.0 + base.ric_base.amax());
            prop_assert!((&base.ric_base - &scaled.ric_base).amax() <= tol);
            prop_assert!((scaled.k_base - c * c * base.k_base).abs() <= 1e-10 * (1.0 + (c * c * base.k_base).abs()));
        }
    }
}
