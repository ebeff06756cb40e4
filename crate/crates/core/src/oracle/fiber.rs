use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::profiles::{RadialProfile, Signature};

use super::MetricChart;

#[derive(Debug, Clone)]
pub enum FiberKind {
    RoundSphere { m: usize, radius: f64 },
    Flat { m: usize },
    Product(Box<FiberChart>, Box<FiberChart>),
}

/// An Einstein fiber `(Fᵐ, g_F)` realised as a concrete chart.
#[derive(Debug, Clone)]
pub struct FiberChart {
    kind: FiberKind,
    chart: MetricChart,
    lambda_f: f64,
}

impl PartialEq for FiberKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::RoundSphere { m: a, radius: r }, Self::RoundSphere { m: b, radius: s }) => a == b && r == s,
            (Self::Flat { m: a }, Self::Flat { m: b }) => a == b,
            (Self::Product(a, b), Self::Product(c, d)) => a.kind == c.kind && b.kind == d.kind,
            _ => false,
        }
    }
}

impl FiberChart {
    /// Round sphere of radius `R` in the stereographic chart
    /// `g = 4R⁴/(R² + |u|²)² δ`, admitted on `|u| < 3R`; `λ_F = (m−1)/R²`.
    pub fn round_sphere(m: usize, radius: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::Parameter("sphere dimension must be >= 1".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Parameter(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        let r2 = radius * radius;
        let r4 = r2 * r2;
        let chart = MetricChart::new(
            m,
            true,
            move |u| {
                let s: f64 = u.iter().map(|v| v * v).sum();
                DMatrix::identity(m, m) * (4.0 * r4 / ((r2 + s) * (r2 + s)))
            },
            move |u| u.iter().map(|v| v * v).sum::<f64>() < 9.0 * r2,
        );
        Ok(Self {
            kind: FiberKind::RoundSphere { m, radius },
            chart,
            lambda_f: (m as f64 - 1.0) / r2,
        })
    }

    /// Sphere whose Einstein constant is `λ_F`, i.e. `R² = (m−1)/λ_F`.
    pub fn sphere_with_lambda(m: usize, lambda_f: f64) -> Result<Self> {
        if m < 2 || !(lambda_f > 0.0) {
            return Err(Error::Parameter(format!(
                "a round sphere with lambda_F = {lambda_f} needs m >= 2 and lambda_F > 0"
            )));
        }
        Self::round_sphere(m, ((m as f64 - 1.0) / lambda_f).sqrt())
    }

    pub fn flat(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Parameter("fiber dimension must be >= 1".into()));
        }
        Ok(Self {
            kind: FiberKind::Flat { m },
            chart: MetricChart::euclidean(m),
            lambda_f: 0.0,
        })
    }

    /// Riemannian product of two Einstein fibers with the same constant.
    pub fn product(a: FiberChart, b: FiberChart) -> Result<Self> {
        let scale = a.lambda_f.abs().max(b.lambda_f.abs()).max(1.0);
        if (a.lambda_f - b.lambda_f).abs() > 1e-12 * scale {
            return Err(Error::Constraint(format!(
                "product of Einstein factors needs equal constants, got {} and {}",
                a.lambda_f, b.lambda_f
            )));
        }
        let chart = block_chart(&a.chart, &b.chart);
        Ok(Self {
            lambda_f: a.lambda_f,
            kind: FiberKind::Product(Box::new(a), Box::new(b)),
            chart,
        })
    }

    pub fn kind(&self) -> &FiberKind {
        &self.kind
    }

    pub fn chart(&self) -> &MetricChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn lambda_f(&self) -> f64 {
        self.lambda_f
    }

    /// Largest coordinate radius that keeps sample points well inside every
    /// factor's admitted region.
    pub fn sample_radius(&self) -> f64 {
        match &self.kind {
            FiberKind::RoundSphere { radius, .. } => *radius,
            FiberKind::Flat { .. } => 1.0,
            FiberKind::Product(a, b) => a.sample_radius().min(b.sample_radius()),
        }
    }
}

fn block_chart(a: &MetricChart, b: &MetricChart) -> MetricChart {
    let (da, db) = (a.dim(), b.dim());
    let (ga, gb) = (a.clone(), b.clone());
    let (ca, cb) = (a.clone(), b.clone());
    MetricChart::new(
        da + db,
        a.is_riemannian() && b.is_riemannian(),
        move |p| {
            let mut g = DMatrix::zeros(da + db, da + db);
            // admissibility is checked by the product domain before evaluation
            let top = ga
                .metric(&p[..da])
                .unwrap_or_else(|_| DMatrix::from_element(da, da, f64::NAN));
            let bottom = gb
                .metric(&p[da..])
                .unwrap_or_else(|_| DMatrix::from_element(db, db, f64::NAN));
            g.view_mut((0, 0), (da, da)).copy_from(&top);
            g.view_mut((da, da), (db, db)).copy_from(&bottom);
            g
        },
        move |p| ca.admits(&p[..da]) && cb.admits(&p[da..]),
    )
}

/// The base `(ℝⁿ, g/ψ²)` as a chart: `g*_{ij} = δ_ij εᵢ / ψ(r)²`.
pub fn base_chart(profile: &RadialProfile, sig: &Signature) -> MetricChart {
    let n = sig.dim();
    let (p_metric, p_domain) = (profile.clone(), profile.clone());
    let (s_metric, s_domain) = (sig.clone(), sig.clone());
    MetricChart::new(
        n,
        sig.is_riemannian(),
        move |x| {
            let psi = p_metric.psi(s_metric.radial(x)).value;
            let w = 1.0 / (psi * psi);
            DMatrix::from_fn(n, n, |i, j| if i == j { s_metric.eps(i) * w } else { 0.0 })
        },
        move |x| {
            let r = s_domain.radial(x);
            p_domain.domain().contains(r) && p_domain.psi(r).value > 0.0
        },
    )
}

/// Block-diagonal chart of `g̃ = g/ψ² + g_F` in dimension `n + m`; the first
/// `n` coordinates are the base.
pub fn product_chart(profile: &RadialProfile, sig: &Signature, fiber: &FiberChart) -> Result<MetricChart> {
    if sig.dim() < 3 {
        return Err(Error::Parameter("base dimension must be >= 3".into()));
    }
    Ok(block_chart(&base_chart(profile, sig), fiber.chart()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ricci_numeric, scalar_numeric, FdConfig};
    use crate::profiles::{make_family_b, make_power_profile, PotentialSpec};
    use approx::assert_abs_diff_eq;
    use num_rational::Rational64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
        (0..dim)
            .map(|_| rng.gen_range(-radius..radius) / (dim as f64).sqrt())
            .collect()
    }

    fn assert_einstein(fiber: &FiberChart, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fd = FdConfig::default();
        for _ in 0..20 {
            let p = random_point(&mut rng, fiber.dim(), fiber.sample_radius());
            let ric = ricci_numeric(fiber.chart(), &p, &fd).unwrap();
            let g = fiber.chart().metric(&p).unwrap();
            assert_abs_diff_eq!(ric, g * fiber.lambda_f(), epsilon = 1e-5);
        }
    }

    #[test]
    fn fibers_are_einstein() {
        assert_einstein(&FiberChart::round_sphere(2, 1.0).unwrap(), 1);
        assert_einstein(&FiberChart::round_sphere(3, 0.8).unwrap(), 2);
        assert_einstein(&FiberChart::sphere_with_lambda(2, 2.0).unwrap(), 3);
        assert_einstein(&FiberChart::flat(3).unwrap(), 4);
        let s2 = FiberChart::round_sphere(2, 1.0).unwrap();
        assert_einstein(&FiberChart::product(s2.clone(), s2).unwrap(), 5);
    }

    #[test]
    fn product_of_unit_two_spheres_has_unit_constant() {
        let s2 = FiberChart::round_sphere(2, 1.0).unwrap();
        let f = FiberChart::product(s2.clone(), s2).unwrap();
        assert_eq!(f.dim(), 4);
        assert_eq!(f.lambda_f(), 1.0);
        let mismatched = FiberChart::product(
            FiberChart::round_sphere(2, 1.0).unwrap(),
            FiberChart::round_sphere(2, 2.0).unwrap(),
        );
        assert!(matches!(mismatched, Err(Error::Constraint(_))));
    }

    #[test]
    fn example_three_fiber_constant() {
        let s = FiberChart::round_sphere(2, std::f64::consts::SQRT_2 / 2.0).unwrap();
        assert_abs_diff_eq!(s.lambda_f(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn flat_product_chart_is_identity() {
        let p = make_power_profile(1.0, 0.0, PotentialSpec::Zero).unwrap();
        let sig = Signature::riemannian(3).unwrap();
        let chart = product_chart(&p, &sig, &FiberChart::flat(2).unwrap()).unwrap();
        assert_eq!(chart.dim(), 5);
        assert_eq!(
            chart.metric(&[0.5, 0.1, 0.2, 0.3, 0.4]).unwrap(),
            DMatrix::identity(5, 5)
        );
    }

    #[test]
    fn example_one_chart_dimension_and_mixed_block() {
        let (_, p) = make_family_b(3, 4, Rational64::from_integer(1), 0.0, 0.0).unwrap();
        let sig = Signature::riemannian(3).unwrap();
        let s2 = FiberChart::round_sphere(2, 1.0).unwrap();
        let fiber = FiberChart::product(s2.clone(), s2).unwrap();
        let chart = product_chart(&p, &sig, &fiber).unwrap();
        assert_eq!(chart.dim(), 7);

        let small = product_chart(&p, &sig, &FiberChart::round_sphere(2, 1.0).unwrap()).unwrap();
        let x = [0.6, -0.3, 0.5, 0.2, -0.4];
        let ric = ricci_numeric(&small, &x, &FdConfig::default()).unwrap();
        assert!(ric.view((0, 3), (3, 2)).amax() < 1e-6);
        assert!(ric.view((3, 0), (2, 3)).amax() < 1e-6);
        assert_abs_diff_eq!(
            scalar_numeric(&base_chart(&p, &sig), &x[..3], &FdConfig::default()).unwrap(),
            2.0,
            epsilon = 1e-4
        );
    }
}
