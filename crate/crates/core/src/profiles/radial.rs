use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Value and first two derivatives of a function of one variable at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(c * self.value, c * self.d1, c * self.d2)
    }
}

impl std::ops::Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet::new(self.value + rhs.value, self.d1 + rhs.d1, self.d2 + rhs.d2)
    }
}

/// A function of the radial invariant `r` with analytically coded first and
/// second derivatives.
pub trait RadialFn: fmt::Debug + Send + Sync {
    fn jet(&self, r: f64) -> Jet;

    fn value(&self, r: f64) -> f64 {
        self.jet(r).value
    }
}

/// `f(r) = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl RadialFn for Constant {
    fn jet(&self, _r: f64) -> Jet {
        Jet::constant(self.0)
    }
}

/// `f(r) = Σ aᵢ r^{pᵢ} + c`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerSum {
    pub terms: Vec<(f64, f64)>,
    pub constant: f64,
}

impl PowerSum {
    pub fn monomial(coef: f64, exponent: f64) -> Self {
        Self {
            terms: vec![(coef, exponent)],
            constant: 0.0,
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn plus(mut self, coef: f64, exponent: f64) -> Self {
        self.terms.push((coef, exponent));
        self
    }
}

fn power_jet(coef: f64, p: f64, r: f64) -> Jet {
    if p == 0.0 {
        return Jet::constant(coef);
    }
    // Integer exponents keep the exact polynomial values (and work for r <= 0).
    if p.fract() == 0.0 && p.abs() < 64.0 {
        let k = p as i32;
        let v = coef * r.powi(k);
        let d1 = coef * p * r.powi(k - 1);
        let d2 = if k == 1 {
            0.0
        } else {
            coef * p * (p - 1.0) * r.powi(k - 2)
        };
        return Jet::new(v, d1, d2);
    }
    let v = coef * r.powf(p);
    Jet::new(v, coef * p * r.powf(p - 1.0), coef * p * (p - 1.0) * r.powf(p - 2.0))
}

impl RadialFn for PowerSum {
    fn jet(&self, r: f64) -> Jet {
        self.terms
            .iter()
            .fold(Jet::constant(self.constant), |acc, &(a, p)| acc + power_jet(a, p, r))
    }
}

/// `f(r) = a (ln r)² + b ln r + c`, defined for `r > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl RadialFn for LogQuadratic {
    fn jet(&self, r: f64) -> Jet {
        let l = r.ln();
        let value = self.a * l * l + self.b * l + self.c;
        let d1 = (2.0 * self.a * l + self.b) / r;
        let d2 = (2.0 * self.a - 2.0 * self.a * l - self.b) / (r * r);
        Jet::new(value, d1, d2)
    }
}

/// `f(r) = a e^{b r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    pub a: f64,
    pub b: f64,
}

impl RadialFn for Exponential {
    fn jet(&self, r: f64) -> Jet {
        let v = self.a * (self.b * r).exp();
        Jet::new(v, self.b * v, self.b * self.b * v)
    }
}

/// `f(r) = factor · inner(r)`.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub factor: f64,
    pub inner: Arc<dyn RadialFn>,
}

impl RadialFn for Scaled {
    fn jet(&self, r: f64) -> Jet {
        self.inner.jet(r).scale(self.factor)
    }
}

/// A user supplied closure returning `(f, f′, f″)`.
#[derive(Clone)]
pub struct FnRadial {
    name: String,
    f: Arc<dyn Fn(f64) -> Jet + Send + Sync>,
}

impl FnRadial {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> Jet + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnRadial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnRadial").field("name", &self.name).finish()
    }
}

impl RadialFn for FnRadial {
    fn jet(&self, r: f64) -> Jet {
        (self.f)(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd(f: &dyn RadialFn, r: f64) -> (f64, f64) {
        let h = 1e-4;
        let d1 = (f.value(r + h) - f.value(r - h)) / (2.0 * h);
        let d2 = (f.value(r + h) - 2.0 * f.value(r) + f.value(r - h)) / (h * h);
        (d1, d2)
    }

    #[test]
    fn power_sum_matches_differences() {
        let f = PowerSum::monomial(2.0, 0.5).plus(-1.5, -1.0).with_constant(3.0);
        for &r in &[0.3, 1.0, 7.5] {
            let j = f.jet(r);
            let (d1, d2) = fd(&f, r);
            assert_relative_eq!(j.d1, d1, max_relative = 1e-6);
            assert_relative_eq!(j.d2, d2, max_relative = 1e-4);
        }
    }

    #[test]
    fn integer_power_has_exact_derivatives() {
        let j = PowerSum::monomial(2.0, 1.0).jet(3.0);
        assert_eq!(j, Jet::new(6.0, 2.0, 0.0));
        let j = PowerSum::monomial(1.0, 2.0).jet(-2.0);
        assert_eq!(j, Jet::new(4.0, -4.0, 2.0));
    }

    #[test]
    fn log_quadratic_derivatives() {
        let f = LogQuadratic {
            a: 0.125,
            b: -0.3,
            c: 2.0,
        };
        for &r in &[0.2, 1.0, 9.0] {
            let j = f.jet(r);
            let (d1, d2) = fd(&f, r);
            assert_relative_eq!(j.d1, d1, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(j.d2, d2, max_relative = 1e-4, epsilon = 1e-6);
        }
    }

    #[test]
    fn exponential_jet() {
        let j = Exponential { a: 1.0, b: 1.0 }.jet(1.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(j.value, e);
        assert_relative_eq!(j.d2, e);
    }
}
