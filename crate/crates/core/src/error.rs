use thiserror::Error;

/// Errors raised across the soliton toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point outside domain: {0}")]
    Domain(String),

    #[error("conformal factor not positive: psi({r}) = {psi}")]
    Positivity { r: f64, psi: f64 },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("degenerate tangent plane: |Q(u,v)| = {0:e}")]
    DegeneratePlane(f64),

    #[error("pseudo-Riemannian chart rejected by the oracle (experimental mode disabled)")]
    PseudoRiemannian,

    #[error("positivity breakdown at r = {r}: psi = {psi:e}")]
    PositivityBreakdown { r: f64, psi: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    Stiffness { t: f64, h: f64 },

    #[error("certification failed: {0}")]
    Certification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
