//! Production decided `h` seconds before delivery.
//!
//! Trading follows the no-delay optimal rate until `T - h`, production is
//! then fixed, and the remaining imbalance is traded as a pure trader. The
//! value of this schedule differs from the no-delay value by a constant
//! `K_h` that does not depend on the state.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::closed_form::{feedback_rate, feedback_rate_pure_trader, value_aux};
use crate::error_bounds::{
    gaussian_shortfall, mean_spread, psi_tilde, variance_spread, BoundError, ErrorBoundReport, SpreadMoments,
};
use crate::model::{MarketState, ModelParams, ProductionConstraint};
use crate::simulate::{Policy, ProductionRule, RateRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DelayError {
    #[error("delay {h} s outside [0, {horizon}] s")]
    OutOfRange { h: f64, horizon: f64 },
    #[error("delayed production needs a finite production cost")]
    PureTrader,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelaySpec {
    h: f64,
}

impl DelaySpec {
    pub fn new(h: f64, params: &ModelParams) -> Result<Self, DelayError> {
        if (0.0..=params.horizon).contains(&h) {
            Ok(DelaySpec { h })
        } else {
            Err(DelayError::OutOfRange { h, horizon: params.horizon })
        }
    }

    pub fn seconds(&self) -> f64 {
        self.h
    }
}

/// State-free premium `K_h` for deciding production `h` seconds early.
pub fn delay_constant(h: f64, params: &ModelParams) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    let r = params.reduced_cost_coefficient();
    let (s0, sd, rho, nu, gamma, eta) =
        (params.sigma0, params.sigma_d, params.rho, params.nu, params.gamma, params.eta);
    let Some(beta) = params.beta.beta() else {
        // without production nothing is decided early
        return 0.0;
    };
    let linear = 0.5 * eta * eta * (s0 * s0 + sd * sd * nu * nu + 2.0 * rho * s0 * sd * nu)
        / ((eta + beta) * (eta + nu) * (r + nu))
        * h;
    let log = |c: f64| {
        gamma * (s0 * s0 + sd * sd * c * c - 2.0 * rho * s0 * sd * c) / ((c + nu) * (c + nu))
            * ((c + nu) * h / (2.0 * gamma)).ln_1p()
    };
    linear + log(eta) - log(r)
}

/// `value_aux + K_h`.
pub fn value_aux_delay(state: &MarketState, params: &ModelParams, h: f64) -> f64 {
    value_aux(state, params) + delay_constant(h, params)
}

/// Production fixed `h` seconds before delivery from the spread and price
/// observed at that time.
pub fn production_rule_delay(
    spread_at_decision: f64,
    y_at_decision: f64,
    params: &ModelParams,
    h: f64,
    constraint: ProductionConstraint,
) -> f64 {
    let r = params.reduced_cost_coefficient();
    let (nu, gamma, mu) = (params.nu, params.gamma, params.mu);
    let expected_spread =
        ((nu * h + 2.0 * gamma) * (mu * h + spread_at_decision) + h * y_at_decision) / ((r + nu) * h + 2.0 * gamma);
    let xi = params.production_share() * expected_spread;
    match constraint {
        ProductionConstraint::NonNegative if xi < 0.0 => 0.0,
        _ => xi,
    }
}

/// Variance of the spread forecast made at `T - h`: the terminal-spread
/// variance density integrated from `h` to the time-to-go `tau`.
pub fn variance_spread_delay_from(tau: f64, h: f64, params: &ModelParams) -> f64 {
    (variance_spread(tau, params) - variance_spread(h, params)).max(0.0)
}

/// [`variance_spread_delay_from`] over the whole horizon.
pub fn variance_spread_delay(h: f64, params: &ModelParams) -> f64 {
    variance_spread_delay_from(params.horizon, h, params)
}

fn check(state: &MarketState, params: &ModelParams, h: f64) -> Result<(f64, f64), BoundError> {
    let beta = params.beta.beta().ok_or(BoundError::PureTrader)?;
    let tau = state.time_to_go(params);
    if !(0.0..=tau).contains(&h) {
        return Err(BoundError::DelayOutOfRange { h, tau });
    }
    Ok((beta, tau))
}

/// Bound on the extra cost of imposing `xi >= 0` on the delayed decision.
pub fn error_bound_delay(state: &MarketState, params: &ModelParams, h: f64) -> Result<ErrorBoundReport, BoundError> {
    let (beta, tau) = check(state, params, h)?;
    let r = params.reduced_cost_coefficient();
    let (eta, nu, gamma) = (params.eta, params.nu, params.gamma);
    let factor = eta * r / (2.0 * beta) * ((r + nu) * h + 2.0 * gamma) / ((eta + nu) * h + 2.0 * gamma);
    let moments = SpreadMoments {
        mean: mean_spread(tau, state.spread(), state.y, params),
        variance: variance_spread_delay_from(tau, h, params),
    };
    let (second, prob) = gaussian_shortfall(moments.mean, moments.variance);
    Ok(ErrorBoundReport { bound: factor * second, shortfall_probability: prob, moments, mc_stderr: 0.0 })
}

/// Expected trading rate after the delayed decision under the constrained rule.
///
/// Before `T - h` the mean rate is the current optimal rate; afterwards it
/// is lowered by the expected truncation of negative production.
pub fn post_decision_mean_rate(state: &MarketState, params: &ModelParams, h: f64) -> Result<f64, BoundError> {
    let (beta, tau) = check(state, params, h)?;
    let r = params.reduced_cost_coefficient();
    let q0 = feedback_rate(tau, state.spread(), state.y, params);
    let v = variance_spread_delay_from(tau, h, params);
    if v <= 0.0 {
        return Ok(q0);
    }
    let m = mean_spread(tau, state.spread(), state.y, params);
    let sd = v.sqrt();
    Ok(q0 - params.eta * r / (beta * ((params.eta + params.nu) * h + 2.0 * params.gamma)) * sd * psi_tilde(m / sd))
}

/// Trade optimally until `T - h`, fix production, then trade the remaining
/// imbalance without production.
pub fn composite_delay_policy(
    params: &ModelParams,
    h: f64,
    constraint: ProductionConstraint,
) -> Result<Policy, DelayError> {
    DelaySpec::new(h, params)?;
    if params.is_pure_trader() {
        return Err(DelayError::PureTrader);
    }
    let p = *params;
    let rate: RateRule = Arc::new(move |s: &MarketState, committed: Option<f64>| {
        let tau = p.horizon - s.t;
        match committed {
            None => feedback_rate(tau, s.spread(), s.y, &p),
            Some(xi) => feedback_rate_pure_trader(tau, s.spread() - xi, s.y, &p),
        }
    });
    let production: ProductionRule =
        Arc::new(move |s: &MarketState| production_rule_delay(s.spread(), s.y, &p, h, ProductionConstraint::Relaxed));
    Ok(Policy::new(rate, p.horizon - h, production, constraint))
}
