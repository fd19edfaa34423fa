//! Pointwise identities the closed forms must satisfy.

use rand::Rng;

use crate::closed_form::{
    feedback_rate, feedback_rate_jump, feedback_rate_jump_additive, feedback_rate_jump_shifted, forecast_equilibrium,
    jump_riccati_coefficients, riccati_coefficients, CoefficientSet,
};
use crate::model::{JumpParams, MarketState, ModelParams};
use crate::rng::keyed_rng;

const FUZZ_STREAM: u64 = 11;

/// Interior points `(tau, spread, y)` drawn uniformly from a box around the
/// scales of `params`.
pub fn fuzz_points(params: &ModelParams, n: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = keyed_rng(seed, 0, FUZZ_STREAM);
    (0..n)
        .map(|_| {
            let tau = params.horizon * rng.random_range(0.05..1.0);
            let spread = rng.random_range(-1e5..1e5);
            let y = rng.random_range(-100.0..200.0);
            (tau, spread, y)
        })
        .collect()
}

fn coefficients(tau: f64, params: &ModelParams, jumps: Option<&JumpParams>) -> CoefficientSet {
    match jumps {
        Some(j) => jump_riccati_coefficients(tau, params, j).corrected(),
        None => riccati_coefficients(tau, params),
    }
}

/// Residual of the dynamic programming equation at one point, divided by the
/// sum of the magnitudes of its terms.
///
/// The time derivative is a five-point difference of the closed form; all
/// other derivatives come from the quadratic form.
pub fn hjb_residual(tau: f64, spread: f64, y: f64, params: &ModelParams, jumps: Option<&JumpParams>) -> f64 {
    let value = |t: f64, z: f64, yy: f64| coefficients(t, params, jumps).evaluate(z, yy);
    let h = tau / 100.0;
    let v_tau = (-value(tau + 2.0 * h, spread, y) + 8.0 * value(tau + h, spread, y) - 8.0 * value(tau - h, spread, y)
        + value(tau - 2.0 * h, spread, y))
        / (12.0 * h);
    let c = coefficients(tau, params, jumps);
    let (vz, vy) = c.gradient(spread, y);
    let (s0, sd) = (params.sigma0, params.sigma_d);
    let hamiltonian = y - vz + params.nu * vy;
    let mut terms = vec![
        -v_tau,
        params.mu * vz,
        s0 * s0 * c.b,
        sd * sd * c.a,
        params.rho * s0 * sd * c.f,
        -hamiltonian * hamiltonian / (4.0 * params.gamma),
    ];
    if let Some(j) = jumps {
        let v0 = c.evaluate(spread, y);
        terms.push(j.lambda * j.p_plus * (c.evaluate(spread + j.delta_plus, y + j.pi_plus) - v0));
        terms.push(j.lambda * j.p_minus() * (c.evaluate(spread + j.delta_minus, y + j.pi_minus) - v0));
    }
    let total: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    total.abs() / scale.max(f64::MIN_POSITIVE)
}

/// Relative gap between the feedback rate and the minimizer of the
/// Hamiltonian built from the coefficients.
pub fn argmin_gap(tau: f64, spread: f64, y: f64, params: &ModelParams, jumps: Option<&JumpParams>) -> f64 {
    let from_value = coefficients(tau, params, jumps).minimizing_rate(spread, y, params);
    let rate = match jumps {
        Some(j) => feedback_rate_jump(tau, spread, y, params, j),
        None => feedback_rate(tau, spread, y, params),
    };
    (from_value - rate).abs() / (from_value.abs().max(rate.abs()) + (y / (2.0 * params.gamma)).abs())
}

/// Drift of the optimal rate along the controlled dynamics, from analytic
/// partial derivatives, together with the magnitude of its terms.
pub fn rate_drift(tau: f64, spread: f64, y: f64, params: &ModelParams, jumps: Option<&JumpParams>) -> (f64, f64) {
    let r = params.reduced_cost_coefficient();
    let a = r + params.nu;
    let g = params.gamma;
    let den = a * tau + 2.0 * g;
    let (lam, delta, pi) = jumps.map_or((0.0, 0.0, 0.0), |j| (j.lambda, j.mean_demand_jump(), j.mean_price_jump()));
    let num = r * (params.mu * tau + spread) - y + lam * (r * delta * tau + pi * a * tau * tau / (4.0 * g));
    let dnum = r * params.mu + lam * (r * delta + pi * a * tau / (2.0 * g));
    let q = num / den;
    let d_tau = (dnum * den - num * a) / (den * den);
    let terms = [-d_tau, (params.mu - q) * r / den, -params.nu * q / den, lam * (r * delta - pi) / den];
    (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
}

/// Relative gap between the two sides of the forecast equilibrium.
pub fn forecast_gap(tau: f64, spread: f64, y: f64, params: &ModelParams) -> f64 {
    let e = forecast_equilibrium(tau, &MarketState::new(params.horizon - tau, 0.0, y, spread), params);
    (e.lhs - e.rhs).abs() / e.lhs.abs().max(e.rhs.abs()).max(f64::MIN_POSITIVE)
}

/// Relative gap between the two algebraic forms of the jump rate.
pub fn jump_rate_forms_gap(tau: f64, spread: f64, y: f64, params: &ModelParams, jumps: &JumpParams) -> f64 {
    let a = feedback_rate_jump_additive(tau, spread, y, params, jumps);
    let b = feedback_rate_jump_shifted(tau, spread, y, params, jumps);
    (a - b).abs() / (a.abs().max(b.abs()) + (y / (2.0 * params.gamma)).abs()).max(f64::MIN_POSITIVE)
}
