//! Explicit value functions and optimal feedback controls.
//!
//! Everything here is evaluated from closed forms in time-to-go `tau`.
//! The common denominator `(r + nu) tau + 2 gamma` is factored out before
//! terms are combined so that the nearly frictionless regime
//! (`gamma`, `nu` around 1e-10) stays accurate in double precision.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{optimal_production_unconstrained, JumpParams, MarketState, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("no turning time: lambda * pi = 0")]
    NoTurningTime,
}

/// Riccati coefficients at one time-to-go.
///
/// The value function is `a z^2 + b y^2 + f z y + g z + h y + k` with
/// `z = d - x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a: f64,
    pub b: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub k: f64,
}

impl CoefficientSet {
    pub fn evaluate(&self, spread: f64, y: f64) -> f64 {
        self.a * spread * spread + self.b * y * y + self.f * spread * y + self.g * spread + self.h * y + self.k
    }

    /// Partial derivatives of the quadratic form in `(spread, y)`.
    pub fn gradient(&self, spread: f64, y: f64) -> (f64, f64) {
        (2.0 * self.a * spread + self.f * y + self.g, 2.0 * self.b * y + self.f * spread + self.h)
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.a, self.b, self.f, self.g, self.h, self.k]
    }

    pub fn from_array(c: [f64; 6]) -> Self {
        CoefficientSet { a: c[0], b: c[1], f: c[2], g: c[3], h: c[4], k: c[5] }
    }

    /// The rate minimizing the Hamiltonian, `-(v_x + nu v_y + y) / (2 gamma)`.
    pub fn minimizing_rate(&self, spread: f64, y: f64, params: &ModelParams) -> f64 {
        let (vz, vy) = self.gradient(spread, y);
        (vz - params.nu * vy - y) / (2.0 * params.gamma)
    }
}

/// Coefficients of the jump model. Quadratic terms are those of `base`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpCoefficientSet {
    pub base: CoefficientSet,
    pub g_lambda: f64,
    pub h_lambda: f64,
    pub k_lambda: f64,
}

impl JumpCoefficientSet {
    /// Coefficient set with the jump-corrected linear and constant terms.
    pub fn corrected(&self) -> CoefficientSet {
        CoefficientSet { g: self.g_lambda, h: self.h_lambda, k: self.k_lambda, ..self.base }
    }

    pub fn evaluate(&self, spread: f64, y: f64) -> f64 {
        self.corrected().evaluate(spread, y)
    }
}

#[inline]
fn denominator(tau: f64, r: f64, p: &ModelParams) -> f64 {
    (r + p.nu) * tau + 2.0 * p.gamma
}

/// `ln(1 + (r+nu) tau / (2 gamma))`, written to survive tiny `gamma`.
#[inline]
fn log_term(tau: f64, r: f64, p: &ModelParams) -> f64 {
    ((r + p.nu) * tau / (2.0 * p.gamma)).ln_1p()
}

fn coefficients_with(tau: f64, r: f64, p: &ModelParams) -> CoefficientSet {
    let (s0, sd, rho, mu, nu, gamma) = (p.sigma0, p.sigma_d, p.rho, p.mu, p.nu, p.gamma);
    let a_ = r + nu;
    let den = denominator(tau, r, p);
    let a = r * (0.5 * nu * tau + gamma) / den;
    let b = -tau / (2.0 * den);
    let f = r * tau / den;
    let g = 2.0 * mu * tau * a;
    let h = -2.0 * r * mu * tau * b;
    let k = gamma * (s0 * s0 + sd * sd * r * r - 2.0 * rho * s0 * sd * r) / (a_ * a_) * log_term(tau, r, p)
        + (sd * sd * r * nu + 2.0 * rho * s0 * sd * r - s0 * s0) / (2.0 * a_) * tau
        + r * mu * mu * tau * tau * (0.5 * nu * tau + gamma) / den;
    CoefficientSet { a, b, f, g, h, k }
}

pub fn riccati_coefficients(tau: f64, params: &ModelParams) -> CoefficientSet {
    coefficients_with(tau, params.reduced_cost_coefficient(), params)
}

/// Auxiliary value function (production sign constraint relaxed).
pub fn value_aux(state: &MarketState, params: &ModelParams) -> f64 {
    riccati_coefficients(state.time_to_go(params), params).evaluate(state.spread(), state.y)
}

fn rate_with(tau: f64, spread: f64, y: f64, r: f64, p: &ModelParams) -> f64 {
    (r * (p.mu * tau + spread) - y) / denominator(tau, r, p)
}

/// Optimal trading rate `(r (mu tau + spread) - y) / ((r + nu) tau + 2 gamma)`.
pub fn feedback_rate(tau: f64, spread: f64, y: f64, params: &ModelParams) -> f64 {
    rate_with(tau, spread, y, params.reduced_cost_coefficient(), params)
}

/// Value function of an agent without production (`r` replaced by `eta`).
pub fn value_pure_trader(state: &MarketState, params: &ModelParams) -> f64 {
    coefficients_with(state.time_to_go(params), params.eta, params).evaluate(state.spread(), state.y)
}

pub fn feedback_rate_pure_trader(tau: f64, spread: f64, y: f64, params: &ModelParams) -> f64 {
    rate_with(tau, spread, y, params.eta, params)
}

/// Both sides of the identity "price paid at the margin = forecast marginal cost".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastEquilibrium {
    /// `y + nu q tau + 2 gamma q`
    pub lhs: f64,
    /// Marginal production cost at the forecast production.
    pub rhs: f64,
    /// Production planned if the current rate were kept until delivery.
    pub forecast_production: f64,
}

pub fn forecast_equilibrium(tau: f64, state: &MarketState, params: &ModelParams) -> ForecastEquilibrium {
    let q = feedback_rate(tau, state.spread(), state.y, params);
    let forecast_spread = state.spread() + params.mu * tau - q * tau;
    let forecast_production = optimal_production_unconstrained(forecast_spread, params);
    let rhs = match params.beta.beta() {
        Some(beta) => beta * forecast_production,
        // marginal imbalance penalty once production is unavailable
        None => params.eta * forecast_spread,
    };
    ForecastEquilibrium { lhs: state.y + params.nu * q * tau + 2.0 * params.gamma * q, rhs, forecast_production }
}

pub fn jump_riccati_coefficients(tau: f64, params: &ModelParams, jumps: &JumpParams) -> JumpCoefficientSet {
    let r = params.reduced_cost_coefficient();
    let base = coefficients_with(tau, r, params);
    let lam = jumps.lambda;
    if lam == 0.0 {
        return JumpCoefficientSet { base, g_lambda: base.g, h_lambda: base.h, k_lambda: base.k };
    }
    let (nu, gamma, mu) = (params.nu, params.gamma, params.mu);
    let a_ = r + nu;
    let t = tau;
    let den = denominator(t, r, params);
    let (pp, pm) = (jumps.p_plus, jumps.p_minus());
    let (dp, dm, ap, am) = (jumps.delta_plus, jumps.delta_minus, jumps.pi_plus, jumps.pi_minus);
    let delta = jumps.mean_demand_jump();
    let pi = jumps.mean_price_jump();

    let g_lambda = base.g + 0.5 * lam * r * t * (pi * t + 2.0 * delta * (nu * t + 2.0 * gamma)) / den;
    let h_lambda = base.h - 0.5 * lam * (pi - 2.0 * r * delta) * t * t / den;

    let t2 = t * t;
    let t3 = t2 * t;
    let sq = |x: f64| x * x;
    let mut k = base.k;
    k += lam * gamma * (pp * sq(ap - r * dp) + pm * sq(am - r * dm)) / (a_ * a_) * log_term(t, r, params);
    k -= 0.5 * lam * (pp * (ap * ap - r * dp * (2.0 * ap + nu * dp)) + pm * (am * am - r * dm * (2.0 * am + nu * dm)))
        / a_
        * t;
    k +=
        0.5 * lam * r * (2.0 * nu * mu * delta + lam * (pp * pp * dp * (ap + nu * dp) + pm * pm * dm * (am + nu * dm)))
            / a_
            * t2;
    k += lam
        * lam
        * gamma
        * r
        * (r * delta * delta + 2.0 * nu * pp * pm * dp * dm - (pp * pp * dp * ap + pm * pm * dm * am))
        / (a_ * den)
        * t2;
    k += 2.0 * lam * gamma * r * r * mu * delta / (a_ * den) * t2;
    k -= lam * lam * pi * pi / (48.0 * gamma) * t3;
    k += 0.5 * lam * lam * pp * pm * r * (2.0 * nu * dp * dm + dm * ap + dp * am) / den * t3;
    k += (4.0 * r * mu * lam * pi - lam * lam * pi * pi) / (8.0 * den) * t3;

    JumpCoefficientSet { base, g_lambda, h_lambda, k_lambda: k }
}

pub fn value_aux_jump(state: &MarketState, params: &ModelParams, jumps: &JumpParams) -> f64 {
    jump_riccati_coefficients(state.time_to_go(params), params, jumps).evaluate(state.spread(), state.y)
}

/// Optimal rate with jumps, additive-correction form.
pub fn feedback_rate_jump(tau: f64, spread: f64, y: f64, params: &ModelParams, jumps: &JumpParams) -> f64 {
    let q = feedback_rate_jump_additive(tau, spread, y, params, jumps);
    debug_assert!({
        let other = feedback_rate_jump_shifted(tau, spread, y, params, jumps);
        (q - other).abs() <= 1e-9 * (1.0 + q.abs().max(other.abs()))
    });
    q
}

pub fn feedback_rate_jump_additive(tau: f64, spread: f64, y: f64, params: &ModelParams, jumps: &JumpParams) -> f64 {
    let r = params.reduced_cost_coefficient();
    let a_ = r + params.nu;
    let den = denominator(tau, r, params);
    let (delta, pi) = (jumps.mean_demand_jump(), jumps.mean_price_jump());
    let correction = jumps.lambda * (r * delta * tau + pi * a_ * tau * tau / (4.0 * params.gamma)) / den;
    feedback_rate(tau, spread, y, params) + correction
}

/// Optimal rate with jumps as the no-jump rate at shifted arguments.
pub fn feedback_rate_jump_shifted(tau: f64, spread: f64, y: f64, params: &ModelParams, jumps: &JumpParams) -> f64 {
    let lam = jumps.lambda;
    let (delta, pi) = (jumps.mean_demand_jump(), jumps.mean_price_jump());
    feedback_rate(tau, spread + lam * delta * tau, y + 0.5 * lam * pi * tau, params)
        + lam * pi * tau / (4.0 * params.gamma)
}

/// Where the turning time falls relative to the remaining window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TurningCase {
    /// At or before the current time, mean price jump positive.
    BeforeStartPositivePrice,
    /// At or before the current time, mean price jump negative.
    BeforeStartNegativePrice,
    /// At or after delivery, mean price jump positive.
    AfterHorizonPositivePrice,
    /// At or after delivery, mean price jump negative.
    AfterHorizonNegativePrice,
    Interior,
}

/// Shape of the expected inventory path on the remaining window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InventoryMeanShape {
    IncreasingThroughout,
    DecreasingThroughout,
    /// Concave: buys first, sells later.
    IncreasingThenDecreasing,
    /// Convex: sells first, buys later.
    DecreasingThenIncreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningTime {
    /// Absolute time (seconds) at which the expected rate is zero.
    pub time: f64,
    pub case: TurningCase,
    pub shape: InventoryMeanShape,
}

/// Time at which the expected optimal rate changes sign.
///
/// The expected rate decreases linearly at `lambda pi / (2 gamma)` per second,
/// so the expected inventory is piecewise monotone around this time.
pub fn expected_rate_turning_time(
    state: &MarketState,
    params: &ModelParams,
    jumps: &JumpParams,
) -> Result<TurningTime, ClosedFormError> {
    let pi = jumps.mean_price_jump();
    let slope = jumps.lambda * pi;
    if slope == 0.0 {
        return Err(ClosedFormError::NoTurningTime);
    }
    let tau = state.time_to_go(params);
    let q0 = feedback_rate_jump(tau, state.spread(), state.y, params, jumps);
    let time = state.t + 2.0 * params.gamma * q0 / slope;
    let positive = pi > 0.0;
    let (case, shape) = if time <= state.t {
        if positive {
            (TurningCase::BeforeStartPositivePrice, InventoryMeanShape::DecreasingThroughout)
        } else {
            (TurningCase::BeforeStartNegativePrice, InventoryMeanShape::IncreasingThroughout)
        }
    } else if time >= params.horizon {
        if positive {
            (TurningCase::AfterHorizonPositivePrice, InventoryMeanShape::IncreasingThroughout)
        } else {
            (TurningCase::AfterHorizonNegativePrice, InventoryMeanShape::DecreasingThroughout)
        }
    } else if positive {
        (TurningCase::Interior, InventoryMeanShape::IncreasingThenDecreasing)
    } else {
        (TurningCase::Interior, InventoryMeanShape::DecreasingThenIncreasing)
    };
    Ok(TurningTime { time, case, shape })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProductionCost;

    fn base() -> ModelParams {
        ModelParams {
            sigma0: 1.0 / 60.0,
            sigma_d: 1000.0 / 60.0,
            beta: ProductionCost::Quadratic(0.002),
            eta: 100.0,
            mu: 0.0,
            nu: 4e-5,
            gamma: 2.22,
            rho: 0.8,
            horizon: 86_400.0,
        }
    }

    #[test]
    fn initial_coefficients() {
        let p = base();
        let c = riccati_coefficients(0.0, &p);
        assert_eq!(c.a, p.reduced_cost_coefficient() / 2.0);
        assert_eq!([c.b, c.f, c.g, c.h, c.k], [0.0; 5]);
    }

    #[test]
    fn equilibrium_price_gives_zero_rate() {
        let p = ModelParams { mu: 0.01, ..base() };
        let r = p.reduced_cost_coefficient();
        let (tau, spread) = (3000.0, 1234.0);
        let y = r * (p.mu * tau + spread);
        assert!(feedback_rate(tau, spread, y, &p).abs() < 1e-15);
        let y_np = p.eta * (p.mu * tau + spread);
        assert!(feedback_rate_pure_trader(tau, spread, y_np, &p).abs() < 1e-12);
    }

    #[test]
    fn turning_time_zero_when_rate_zero() {
        let p = base();
        let j =
            JumpParams { lambda: 1e-5, p_plus: 1.0, delta_plus: 1.0, delta_minus: -1.0, pi_plus: 1.0, pi_minus: -1.0 };
        let tau = p.horizon;
        // choose y so that the jump rate vanishes at the initial state
        let spread = 1000.0;
        let q_at_zero_y = feedback_rate_jump(tau, spread, 0.0, &p, &j);
        let dq_dy = -1.0 / ((p.reduced_cost_coefficient() + p.nu) * tau + 2.0 * p.gamma);
        let y = -q_at_zero_y / dq_dy;
        let tt = expected_rate_turning_time(&MarketState::new(0.0, 0.0, y, spread), &p, &j).unwrap();
        assert!(tt.time.abs() < 1e-6);
    }

    #[test]
    fn no_turning_time_without_price_drift() {
        let p = base();
        let j =
            JumpParams { lambda: 0.0, p_plus: 1.0, delta_plus: 1.0, delta_minus: -1.0, pi_plus: 1.0, pi_minus: -1.0 };
        assert_eq!(
            expected_rate_turning_time(&MarketState::new(0.0, 0.0, 50.0, 0.0), &p, &j),
            Err(ClosedFormError::NoTurningTime)
        );
    }
}
