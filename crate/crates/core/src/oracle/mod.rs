//! Independent checks of the closed forms: Riccati ODE integration,
//! quadrature, pointwise identities and Monte Carlo probes.

mod identities;
mod ode;
mod probe;
mod quadrature;
mod report;

pub use identities::{argmin_gap, forecast_gap, fuzz_points, hjb_residual, jump_rate_forms_gap, rate_drift};
pub use ode::{
    compare_jump_riccati, compare_riccati, compare_with, integrate_jump_riccati, integrate_riccati, integrate_with,
    OdeComparison, OdeSolution, TimeScale, STIFFNESS_THRESHOLD,
};
pub use probe::{optimality_probe, BumpProfile, ProbeReport, ProbeSetup, ProfileResult};
pub use quadrature::{integrate_adaptive, variance_by_quadrature, variance_density, Quadrature};
pub use report::{
    ode_tolerance, run_verification, CheckResult, ClosedFormSource, LibraryClosedForms, ProbeOptions,
    VerificationReport, VerifyOptions, DEFAULT_VERIFY_SEED,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("integration step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("coefficient {coefficient} blew up near tau = {tau} s")]
    Blowup { tau: f64, coefficient: &'static str },
}
