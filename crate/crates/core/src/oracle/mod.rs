//! Brute-force curvature of an arbitrary coordinate metric chart by finite
//! differences. Shares no code with the closed forms in [`crate::curvature`].
//!
//! Metric derivatives use the fourth-order central stencil
//! `(−f(x+2h) + 8f(x+h) − 8f(x−h) + f(x−2h)) / 12h`; derivatives of the
//! Christoffel symbols apply the same stencil to [`christoffel`] outputs.
//! With the default step `h = 1e-3` the truncation error is `O(h⁴)` and the
//! round-off floor is about `1e-10` for curvature on well-conditioned charts.

mod fiber;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use fiber::{base_chart, product_chart, FiberChart, FiberKind};

type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type DomainFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A coordinate patch with metric `g(p)` and an admissibility predicate.
#[derive(Clone)]
pub struct MetricChart {
    dim: usize,
    g: MetricFn,
    domain: DomainFn,
    riemannian: bool,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("dim", &self.dim)
            .field("riemannian", &self.riemannian)
            .finish_non_exhaustive()
    }
}

impl MetricChart {
    pub fn new(
        dim: usize,
        riemannian: bool,
        g: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            g: Arc::new(g),
            domain: Arc::new(domain),
            riemannian,
        }
    }

    /// Constant diagonal metric `diag(ε)`.
    pub fn flat(eps: &[i8]) -> Self {
        let diag = DVector::from_iterator(eps.len(), eps.iter().map(|&e| f64::from(e)));
        let riemannian = eps.iter().all(|&e| e == 1);
        let g = DMatrix::from_diagonal(&diag);
        Self::new(eps.len(), riemannian, move |_| g.clone(), |_| true)
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::flat(&vec![1; dim])
    }

    /// `g = e^{2σ(p)} δ` for a scalar field `σ`.
    pub fn conformally_flat(
        dim: usize,
        sigma: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            dim,
            true,
            move |p| DMatrix::identity(dim, dim) * (2.0 * sigma(p)).exp(),
            domain,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_riemannian(&self) -> bool {
        self.riemannian
    }

    pub fn admits(&self, p: &[f64]) -> bool {
        p.len() == self.dim && (self.domain)(p)
    }

    /// The metric at `p`, checked for admissibility, symmetry and
    /// invertibility (`|det g| > 1e-12`).
    pub fn metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        if p.len() != self.dim {
            return Err(Error::Parameter(format!(
                "chart of dimension {} evaluated at a {}-point",
                self.dim,
                p.len()
            )));
        }
        if !(self.domain)(p) {
            return Err(Error::Domain(format!("point {p:?} not admitted by chart")));
        }
        let g = (self.g)(p);
        let scale = g.amax().max(1.0);
        if (&g - g.transpose()).amax() > 1e-12 * scale {
            return Err(Error::LinearAlgebra(format!("metric not symmetric at {p:?}")));
        }
        let det = g.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::LinearAlgebra(format!(
                "singular metric at {p:?} (det = {det:e})"
            )));
        }
        Ok(g)
    }
}

/// Finite-difference settings for the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    /// Admit charts with indefinite metrics (experimental).
    pub allow_pseudo: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            allow_pseudo: false,
        }
    }
}

impl FdConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }
}

fn check_chart(chart: &MetricChart, fd: &FdConfig) -> Result<()> {
    if !chart.riemannian && !fd.allow_pseudo {
        return Err(Error::PseudoRiemannian);
    }
    if !(fd.step > 0.0) {
        return Err(Error::Parameter(format!(
            "finite-difference step must be positive, got {}",
            fd.step
        )));
    }
    Ok(())
}

const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

/// Fourth-order central derivative along `axis` of a vector-valued function.
fn central<F>(p: &[f64], axis: usize, step: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut q = p.to_vec();
    let mut acc: Option<Vec<f64>> = None;
    for (offset, weight) in STENCIL {
        q[axis] = p[axis] + offset * step;
        let v = f(&q)?;
        match acc.as_mut() {
            None => acc = Some(v.into_iter().map(|x| weight * x).collect()),
            Some(a) => a.iter_mut().zip(v).for_each(|(a, x)| *a += weight * x),
        }
    }
    let denom = 12.0 * step;
    Ok(acc.unwrap().into_iter().map(|x| x / denom).collect())
}

/// Levi-Civita symbols `Γ^k_{ij}` stored as `[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn christoffel_raw(chart: &MetricChart, p: &[f64], step: f64) -> Result<Christoffel> {
    let d = chart.dim;
    let g = chart.metric(p)?;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::LinearAlgebra(format!("metric not invertible at {p:?}")))?;
    // dg[l] = ∂_l g, flattened row-major
    let mut dg = Vec::with_capacity(d);
    for l in 0..d {
        let deriv = central(p, l, step, |q| {
            let gq = chart.metric(q)?;
            Ok(gq.as_slice().to_vec())
        })?;
        dg.push(DMatrix::from_column_slice(d, d, &deriv));
    }
    let mut data = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for l in 0..d {
                let lower = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                if lower == 0.0 {
                    continue;
                }
                for k in 0..d {
                    data[(k * d + i) * d + j] += ginv[(k, l)] * lower;
                }
            }
        }
    }
    Ok(Christoffel { dim: d, data })
}

/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
pub fn christoffel(chart: &MetricChart, p: &[f64], fd: &FdConfig) -> Result<Christoffel> {
    check_chart(chart, fd)?;
    christoffel_raw(chart, p, fd.step)
}

/// Christoffel symbols at `p` together with their first derivatives
/// `∂_m Γ^k_{ij}` stored as `[m][k][i][j]`.
struct ConnectionJet {
    gamma: Christoffel,
    dgamma: Vec<f64>,
}

impl ConnectionJet {
    fn compute(chart: &MetricChart, p: &[f64], fd: &FdConfig) -> Result<Self> {
        check_chart(chart, fd)?;
        let d = chart.dim;
        let gamma = christoffel_raw(chart, p, fd.step)?;
        let mut dgamma = Vec::with_capacity(d * d * d * d);
        for m in 0..d {
            let deriv = central(p, m, fd.step, |q| Ok(christoffel_raw(chart, q, fd.step)?.data))?;
            dgamma.extend(deriv);
        }
        Ok(Self { gamma, dgamma })
    }

    #[inline]
    fn d(&self, m: usize, k: usize, i: usize, j: usize) -> f64 {
        let d = self.gamma.dim;
        self.dgamma[((m * d + k) * d + i) * d + j]
    }

    fn ricci(&self) -> DMatrix<f64> {
        let d = self.gamma.dim;
        let g = &self.gamma;
        DMatrix::from_fn(d, d, |i, j| {
            let mut r = 0.0;
            for k in 0..d {
                r += self.d(k, k, i, j) - self.d(i, k, k, j);
                for l in 0..d {
                    r += g.get(k, k, l) * g.get(l, i, j) - g.get(k, i, l) * g.get(l, k, j);
                }
            }
            r
        })
    }

    /// `R^l_{ijk}` with `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l`.
    fn riemann(&self) -> Riemann {
        let d = self.gamma.dim;
        let g = &self.gamma;
        let mut data = vec![0.0; d * d * d * d];
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let mut v = self.d(i, l, j, k) - self.d(j, l, i, k);
                        for m in 0..d {
                            v += g.get(l, i, m) * g.get(m, j, k) - g.get(l, j, m) * g.get(m, i, k);
                        }
                        data[((l * d + i) * d + j) * d + k] = v;
                    }
                }
            }
        }
        Riemann { dim: d, data }
    }
}

/// Riemann tensor `R^l_{ijk}` stored as `[l][i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    #[inline]
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim;
        self.data[((l * d + i) * d + j) * d + k]
    }

    /// `Ric_{jk} = R^i_{ijk}`.
    pub fn contract(&self) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |j, k| (0..d).map(|i| self.get(i, i, j, k)).sum())
    }
}

/// `R_ij = ∂_k Γ^k_ij − ∂_i Γ^k_kj + Γ^k_kl Γ^l_ij − Γ^k_il Γ^l_kj`.
pub fn ricci_numeric(chart: &MetricChart, p: &[f64], fd: &FdConfig) -> Result<DMatrix<f64>> {
    Ok(ConnectionJet::compute(chart, p, fd)?.ricci())
}

pub fn riemann_numeric(chart: &MetricChart, p: &[f64], fd: &FdConfig) -> Result<Riemann> {
    Ok(ConnectionJet::compute(chart, p, fd)?.riemann())
}

fn trace_with_inverse(g: &DMatrix<f64>, ric: &DMatrix<f64>) -> Result<f64> {
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::LinearAlgebra("metric not invertible".into()))?;
    Ok(ginv.component_mul(ric).sum())
}

/// `K = g^{ij} R_ij`.
pub fn scalar_numeric(chart: &MetricChart, p: &[f64], fd: &FdConfig) -> Result<f64> {
    let ric = ricci_numeric(chart, p, fd)?;
    trace_with_inverse(&chart.metric(p)?, &ric)
}

/// Ricci tensor and scalar curvature from a single connection evaluation.
pub fn ricci_and_scalar(chart: &MetricChart, p: &[f64], fd: &FdConfig) -> Result<(DMatrix<f64>, f64)> {
    let ric = ricci_numeric(chart, p, fd)?;
    let k = trace_with_inverse(&chart.metric(p)?, &ric)?;
    Ok((ric, k))
}

/// `K(u,v) = ⟨R(u,v)v, u⟩ / (g(u,u)g(v,v) − g(u,v)²)`.
pub fn sectional_numeric(chart: &MetricChart, p: &[f64], u: &[f64], v: &[f64], fd: &FdConfig) -> Result<f64> {
    let riemann = riemann_numeric(chart, p, fd)?;
    sectional_from(&riemann, &chart.metric(p)?, u, v)
}

/// Sectional curvature of several planes sharing one Riemann evaluation.
pub fn sectional_many(
    chart: &MetricChart,
    p: &[f64],
    planes: &[(Vec<f64>, Vec<f64>)],
    fd: &FdConfig,
) -> Result<Vec<f64>> {
    let riemann = riemann_numeric(chart, p, fd)?;
    let g = chart.metric(p)?;
    planes.iter().map(|(u, v)| sectional_from(&riemann, &g, u, v)).collect()
}

#[allow(clippy::needless_range_loop)]
fn sectional_from(riemann: &Riemann, g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> Result<f64> {
    let d = riemann.dim;
    if u.len() != d || v.len() != d {
        return Err(Error::Parameter("tangent vectors have wrong dimension".into()));
    }
    let (uu, vv) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
    let guu = uu.dot(&(g * &uu));
    let gvv = vv.dot(&(g * &vv));
    let guv = uu.dot(&(g * &vv));
    let q = guu * gvv - guv * guv;
    if !(q.abs() > 1e-10) {
        return Err(Error::DegeneratePlane(q.abs()));
    }
    // w^l = R^l_{ijk} u^i v^j v^k, then ⟨w, u⟩
    let mut w = DVector::zeros(d);
    for l in 0..d {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    acc += riemann.get(l, i, j, k) * u[i] * v[j] * v[k];
                }
            }
        }
        w[l] = acc;
    }
    Ok(uu.dot(&(g * w)) / q)
}

/// Covariant Hessian `∂_i∂_j f − Γ^k_ij ∂_k f` of a scalar field, with the
/// second derivatives obtained by differencing a differenced gradient.
pub fn hessian_numeric(
    chart: &MetricChart,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    p: &[f64],
    fd: &FdConfig,
) -> Result<DMatrix<f64>> {
    check_chart(chart, fd)?;
    let d = chart.dim;
    let gamma = christoffel_raw(chart, p, fd.step)?;
    let gradient = |q: &[f64]| -> Result<Vec<f64>> {
        (0..d)
            .map(|k| {
                if !chart.admits(q) {
                    return Err(Error::Domain(format!("point {q:?} not admitted by chart")));
                }
                Ok(central(q, k, fd.step, |s| Ok(vec![f(s)]))?[0])
            })
            .collect()
    };
    let grad = gradient(p)?;
    let mut second = DMatrix::zeros(d, d);
    for i in 0..d {
        let col = central(p, i, fd.step, gradient)?;
        for j in 0..d {
            second[(i, j)] = col[j];
        }
    }
    let second = (&second + second.transpose()) * 0.5;
    Ok(DMatrix::from_fn(d, d, |i, j| {
        second[(i, j)] - (0..d).map(|k| gamma.get(k, i, j) * grad[k]).sum::<f64>()
    }))
}
