//! Verification toolkit for gradient ρ-Einstein solitons on products
//! `(Bⁿ, g/ψ²) × (Fᵐ, g_F)` where the base is conformal to a pseudo-Euclidean
//! space and radially symmetric, and the fiber is Einstein.
//!
//! The crate is organised bottom-up:
//!
//! * [`profiles`]: radial conformal factors `ψ(r)` and potentials `h(r)` with
//!   analytic derivatives, including both closed-form Schouten families.
//! * [`curvature`]: closed-form Ricci, Hessian and scalar curvature of the
//!   product metric in coordinates.
//! * [`oracle`]: an independent finite-difference curvature engine for
//!   arbitrary coordinate charts.
//! * [`systems`]: residuals of the PDE system, its radial ODE reduction, the
//!   Schouten specialisation, the necessary ODE for `ψ` and the exponent
//!   equation.
//! * [`classify`]: the Schouten classification, the three worked examples and
//!   the cylinder curvature certificate.
//! * [`integrate`]: adaptive integration of the `ψ` ODE and recovery of `h`.
//!
//! Curvature convention: `R_ij = ∂_k Γ^k_ij − ∂_i Γ^k_kj + Γ^k_kl Γ^l_ij − Γ^k_il Γ^l_kj`,
//! so round spheres have positive Ricci and sectional curvature.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod curvature;
pub mod error;
pub mod integrate;
pub mod oracle;
pub mod profiles;
pub mod systems;

pub use error::{Error, Result};
pub use num_rational::Rational64;

pub use classify::{
    certify_cylinder, classify_schouten, paper_examples, require_family_b, verify_solution, CylinderCertificate,
    Family, PaperExample, SolitonType, SolutionDescriptor,
};
pub use curvature::{
    curvature_report, hessian_closed_form, ricci_closed_form, scalar_curvature, CurvatureReport, PointBase,
    RicciBlocks, ScalarCurvatures,
};
pub use integrate::{integrate_lemma, recover_h, LemmaTrajectory, RecoveredPotential};
pub use oracle::{FdConfig, FiberChart, MetricChart};
pub use profiles::{
    make_family_a, make_family_b, make_power_profile, FamilyASolution, FamilyBSolution, Interval, Jet, PotentialSpec,
    RadialFn, RadialProfile, Signature, SolitonParams,
};
pub use systems::{
    exponent_constraint, lemma_ode_residual, ode_residuals, pde_ode_consistency, pde_residuals, schouten_residuals,
    EquationId, LogGrid, ResidualReport,
};
