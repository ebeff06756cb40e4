//! JSON run configuration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::FromPrimitive;
use serde::{Deserialize, Serialize};
use soliton_core::profiles::{ratio_to_f64, LogQuadratic, PowerSum};
use soliton_core::{
    make_family_a, make_family_b, make_power_profile, Error as CoreError, FiberChart, LogGrid, PotentialSpec, RadialFn,
    RadialProfile, Rational64, Signature, SolitonParams, SolutionDescriptor,
};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A number given either as JSON number or as a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn exact(&self) -> Result<Rational64, CliError> {
        match self {
            Num::Int(i) => Ok(Rational64::from_integer(*i)),
            Num::Float(f) => {
                Rational64::from_f64(*f).ok_or_else(|| CliError::Parse(format!("{f} is not representable as a ratio")))
            }
            Num::Text(s) => {
                let s = s.trim();
                if let Ok(q) = Rational64::from_str(s) {
                    return Ok(q);
                }
                let f: f64 = s
                    .parse()
                    .map_err(|_| CliError::Parse(format!("cannot read {s:?} as a number or p/q")))?;
                Num::Float(f).exact()
            }
        }
    }

    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Num::Int(i) => Ok(*i as f64),
            Num::Float(f) => Ok(*f),
            Num::Text(_) => self.exact().map(ratio_to_f64),
        }
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num::Float(v)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Int(i) => write!(f, "{i}"),
            Num::Float(v) => write!(f, "{v}"),
            Num::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rho {
    Named(String),
    Value(Num),
}

impl Default for Rho {
    fn default() -> Self {
        Rho::Named("schouten".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberSpec {
    RoundSphere {
        #[serde(default)]
        m: Option<usize>,
        radius: Num,
    },
    /// Round sphere scaled so that `Ric = λ g`.
    Sphere {
        #[serde(default)]
        m: Option<usize>,
        lambda: Num,
    },
    Flat {
        #[serde(default)]
        m: Option<usize>,
    },
    Product {
        factors: Vec<FiberSpec>,
    },
}

impl FiberSpec {
    fn build(&self, m_total: usize) -> Result<FiberChart, CliError> {
        let m_of = |m: &Option<usize>| m.unwrap_or(m_total);
        let chart = match self {
            FiberSpec::RoundSphere { m, radius } => FiberChart::round_sphere(m_of(m), radius.value()?)?,
            FiberSpec::Sphere { m, lambda } => FiberChart::sphere_with_lambda(m_of(m), lambda.value()?)?,
            FiberSpec::Flat { m } => FiberChart::flat(m_of(m))?,
            FiberSpec::Product { factors } => {
                if factors.len() < 2 {
                    return Err(CliError::Parse("a product fiber needs at least two factors".into()));
                }
                let mut it = factors.iter();
                let mut acc = it.next().unwrap().build_factor()?;
                for f in it {
                    acc = FiberChart::product(acc, f.build_factor()?)?;
                }
                acc
            }
        };
        if chart.dim() != m_total {
            return Err(CliError::Core(CoreError::Constraint(format!(
                "fiber has dimension {}, config says m = {m_total}",
                chart.dim()
            ))));
        }
        Ok(chart)
    }

    fn build_factor(&self) -> Result<FiberChart, CliError> {
        let m = match self {
            FiberSpec::RoundSphere { m, .. } | FiberSpec::Sphere { m, .. } | FiberSpec::Flat { m } => {
                m.ok_or_else(|| CliError::Parse("product factors need an explicit m".into()))?
            }
            FiberSpec::Product { factors } => factors.iter().map(|f| f.build_factor().map(|c| c.dim())).sum::<Result<
                usize,
                _,
            >>(
            )?,
        };
        self.build(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    /// `Σ cᵢ r^{eᵢ} + constant`
    PowerSum {
        terms: Vec<(f64, f64)>,
        #[serde(default)]
        constant: f64,
    },
    /// `a (ln r)² + b ln r + c`
    LogQuadratic {
        a: f64,
        b: f64,
        c: f64,
    },
}

impl PotentialConfig {
    fn build(&self) -> PotentialSpec {
        match self {
            PotentialConfig::Zero => PotentialSpec::Zero,
            PotentialConfig::PowerSum { terms, constant } => {
                let mut p = PowerSum::default().with_constant(*constant);
                for &(c, e) in terms {
                    p = p.plus(c, e);
                }
                PotentialSpec::Explicit(Arc::new(p) as Arc<dyn RadialFn>)
            }
            PotentialConfig::LogQuadratic { a, b, c } => {
                PotentialSpec::Explicit(Arc::new(LogQuadratic { a: *a, b: *b, c: *c }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    /// `ψ = k₂ r`, `h = λ_F/(2k₂² r) + k₁`
    FamilyA {
        k2: Num,
        #[serde(default)]
        k1: f64,
    },
    /// `ψ = k₂ r^{1/2}`, `h = (n−2)/8 (ln r)² + c ln r + c₁`
    FamilyB {
        k2: Num,
        #[serde(default)]
        c: f64,
        #[serde(default)]
        c1: f64,
    },
    /// `ψ = k r^s` with an explicit potential.
    Power {
        k: f64,
        s: f64,
        #[serde(default = "zero_potential")]
        h: PotentialConfig,
    },
    /// Cubic-spline interpolation of sampled `ψ` and `h`.
    Tabulated { r: Vec<f64>, psi: Vec<f64>, h: Vec<f64> },
}

fn zero_potential() -> PotentialConfig {
    PotentialConfig::Zero
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub closed: Option<f64>,
    #[serde(default)]
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSampling {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_oracle_rmin")]
    pub r_min: f64,
    #[serde(default = "default_oracle_rmax")]
    pub r_max: f64,
}

fn default_points() -> usize {
    50
}
fn default_oracle_rmin() -> f64 {
    0.5
}
fn default_oracle_rmax() -> f64 {
    2.0
}

impl Default for OracleSampling {
    fn default() -> Self {
        Self {
            points: default_points(),
            r_min: default_oracle_rmin(),
            r_max: default_oracle_rmax(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub m: usize,
    #[serde(default)]
    pub rho: Rho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberSpec>,
    pub profile: ProfileConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_f: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_tilde: Option<Num>,
    pub grid: LogGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSampling>,
    #[serde(default)]
    pub seed: u64,
}

/// Everything a run needs, resolved from a [`Config`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub descriptor: SolutionDescriptor,
    pub fiber: Option<FiberChart>,
    pub lambda_f_exact: Option<Rational64>,
    pub lambda_tilde_exact: Option<Rational64>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Parse(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        LogGrid::new(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.count).map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn signature(&self) -> Result<Signature, CliError> {
        let sig = match (&self.signature, self.n) {
            (Some(eps), n) => {
                let sig = Signature::new(eps.clone())?;
                if let Some(n) = n {
                    if n != sig.dim() {
                        return Err(CliError::Parse(format!(
                            "signature has length {}, but n = {n}",
                            sig.dim()
                        )));
                    }
                }
                sig
            }
            (None, Some(n)) => Signature::riemannian(n)?,
            (None, None) => return Err(CliError::Parse("config needs n or signature".into())),
        };
        Ok(sig)
    }

    fn rho(&self, n: usize) -> Result<f64, CliError> {
        match &self.rho {
            Rho::Named(s) if s == "schouten" => Ok(soliton_core::profiles::schouten_rho(n)),
            Rho::Named(s) => Num::Text(s.clone())
                .value()
                .map_err(|_| CliError::Parse(format!("unknown rho {s:?}; use \"schouten\" or a number"))),
            Rho::Value(v) => v.value(),
        }
    }

    pub fn tol_closed(&self) -> Option<f64> {
        self.tolerances.and_then(|t| t.closed)
    }

    pub fn tol_oracle(&self) -> Option<f64> {
        self.tolerances.and_then(|t| t.oracle)
    }

    pub fn oracle_sampling(&self) -> OracleSampling {
        self.oracle.unwrap_or_default()
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let sig = self.signature()?;
        let n = sig.dim();
        let m = self.m;
        let rho = self.rho(n)?;
        let lf_override = self.lambda_f.as_ref().map(Num::exact).transpose()?;
        let lt_override = self.lambda_tilde.as_ref().map(Num::exact).transpose()?;
        let fiber = self.fiber.as_ref().map(|f| f.build(m)).transpose()?;
        let fiber_lambda = fiber.as_ref().map(|f| nice_ratio(f.lambda_f())).transpose()?;

        let (profile, lf, lt): (RadialProfile, Option<Rational64>, Option<Rational64>) = match &self.profile {
            ProfileConfig::FamilyA { k2, k1 } => {
                let lf = lf_override
                    .or(fiber_lambda)
                    .ok_or_else(|| CliError::Parse("family_a needs lambda_f (top level) or a fiber".into()))?;
                let (sol, profile) = make_family_a(n, m, lf, k2.exact()?, *k1)?;
                (
                    profile,
                    Some(sol.lambda_f),
                    Some(lt_override.unwrap_or(sol.lambda_tilde)),
                )
            }
            ProfileConfig::FamilyB { k2, c, c1 } => {
                let (sol, profile) = make_family_b(n, m, k2.exact()?, *c, *c1)?;
                (
                    profile,
                    Some(lf_override.unwrap_or(sol.lambda_f)),
                    Some(lt_override.unwrap_or(sol.lambda_tilde)),
                )
            }
            ProfileConfig::Power { k, s, h } => {
                let profile = make_power_profile(*k, *s, h.build())?;
                (profile, lf_override.or(fiber_lambda), lt_override)
            }
            ProfileConfig::Tabulated { r, psi, h } => {
                let profile = RadialProfile::tabulated(r, psi, h)?;
                (profile, lf_override.or(fiber_lambda), lt_override)
            }
        };
        let lf = lf.ok_or_else(|| CliError::Parse("lambda_f is required for this profile".into()))?;
        let lt = lt.ok_or_else(|| CliError::Parse("lambda_tilde is required for this profile".into()))?;

        if let Some(f) = &fiber {
            if (f.lambda_f() - ratio_to_f64(lf)).abs() > 1e-12 * (1.0 + ratio_to_f64(lf).abs()) {
                return Err(CliError::Core(CoreError::Constraint(format!(
                    "fiber Einstein constant {} differs from lambda_F = {lf}",
                    f.lambda_f()
                ))));
            }
        }

        let params = SolitonParams::new(n, m, rho, ratio_to_f64(lf), ratio_to_f64(lt))?;
        let mut descriptor = SolutionDescriptor::custom(profile, sig, params)?;
        descriptor.family = match self.profile {
            ProfileConfig::FamilyA { .. } => soliton_core::Family::A,
            ProfileConfig::FamilyB { .. } => soliton_core::Family::B,
            _ => soliton_core::Family::Custom,
        };
        descriptor.lambda_f_exact = Some(lf);
        descriptor.lambda_tilde_exact = Some(lt);
        descriptor.constant_potential =
            matches!(self.profile, ProfileConfig::FamilyA { .. }) && lf == Rational64::from_integer(0);
        if let ProfileConfig::FamilyA { k2, .. } | ProfileConfig::FamilyB { k2, .. } = &self.profile {
            descriptor.k2 = Some(k2.exact()?);
        }
        Ok(Resolved {
            descriptor,
            fiber,
            lambda_f_exact: Some(lf),
            lambda_tilde_exact: Some(lt),
        })
    }
}

/// Small-denominator ratio within `1e-9` of `v` when one exists.
pub fn nice_ratio(v: f64) -> Result<Rational64, CliError> {
    for d in 1..=1000i64 {
        let p = (v * d as f64).round();
        if (v * d as f64 - p).abs() < 1e-9 && p.abs() < i64::MAX as f64 {
            return Ok(Rational64::new(p as i64, d));
        }
    }
    Num::Float(v).exact()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family_a_json() -> &'static str {
        r#"{
            "schema_version": 1,
            "n": 3, "m": 2,
            "rho": "schouten",
            "fiber": {"kind": "sphere", "lambda": 3},
            "profile": {"kind": "family_a", "k2": 1},
            "lambda_f": 3,
            "grid": {"r_min": 0.1, "r_max": 10.0, "count": 100}
        }"#
    }

    #[test]
    fn numbers_accept_ratios() {
        assert_eq!(Num::Text("-1/2".into()).exact().unwrap(), Rational64::new(-1, 2));
        assert_eq!(Num::Text("0.25".into()).exact().unwrap(), Rational64::new(1, 4));
        assert_eq!(Num::Int(3).exact().unwrap(), Rational64::from_integer(3));
        assert_eq!(Num::Float(0.5).exact().unwrap(), Rational64::new(1, 2));
        assert!(Num::Text("half".into()).exact().is_err());
        assert_eq!(
            nice_ratio(1.0 / 0.5000000000000001).unwrap(),
            Rational64::from_integer(2)
        );
    }

    #[test]
    fn family_a_resolves() {
        let cfg = Config::from_json(family_a_json()).unwrap();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.lambda_f_exact, Some(Rational64::from_integer(3)));
        assert_eq!(r.lambda_tilde_exact, Some(Rational64::new(3, 2)));
        assert!(r.descriptor.params.is_schouten());
        assert_eq!(r.fiber.unwrap().dim(), 2);
    }

    #[test]
    fn round_trip_through_json() {
        let cfg = Config::from_json(family_a_json()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(Config::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn schema_version_is_checked() {
        let text = family_a_json().replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(Config::from_json(&text), Err(CliError::Parse(_))));
    }

    #[test]
    fn fiber_mismatch_is_a_constraint_error() {
        let text = family_a_json().replace("\"lambda\": 3", "\"lambda\": 2");
        let err = Config::from_json(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn product_fiber_dimensions_add() {
        let text = r#"{
            "schema_version": 1, "n": 3, "m": 4,
            "fiber": {"kind": "product", "factors": [
                {"kind": "round_sphere", "m": 2, "radius": 1},
                {"kind": "round_sphere", "m": 2, "radius": 1}]},
            "profile": {"kind": "family_b", "k2": 1},
            "grid": {"r_min": 0.1, "r_max": 10.0, "count": 10}
        }"#;
        let r = Config::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(r.lambda_tilde_exact, Some(Rational64::new(-1, 2)));
        assert_eq!(r.fiber.unwrap().lambda_f(), 1.0);
    }

    #[test]
    fn pseudo_signature_and_n_must_agree() {
        let text = family_a_json().replace("\"n\": 3", "\"n\": 4, \"signature\": [1, -1, 1]");
        assert!(matches!(
            Config::from_json(&text).unwrap().resolve(),
            Err(CliError::Parse(_))
        ));
    }
}
