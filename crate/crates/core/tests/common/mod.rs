#![allow(dead_code)]

use intraday::model::{JumpParams, MarketState, ModelParams, ProductionCost};

pub const DAY: f64 = 86_400.0;
pub const HOUR: f64 = 3_600.0;

/// Trading-day parameters with a configurable imbalance penalty.
pub fn trading_day(eta: f64) -> ModelParams {
    ModelParams {
        sigma0: 1.0 / 60.0,
        sigma_d: 1000.0 / 60.0,
        beta: ProductionCost::Quadratic(0.002),
        eta,
        mu: 0.0,
        nu: 4e-5,
        gamma: 2.22,
        rho: 0.8,
        horizon: DAY,
    }
}

/// Nearly frictionless market used for the tables.
pub fn frictionless(horizon: f64) -> ModelParams {
    ModelParams { eta: 200.0, nu: 1e-10, gamma: 1e-10, horizon, ..trading_day(200.0) }
}

pub fn jumps(p_plus: f64) -> JumpParams {
    JumpParams { lambda: 1.5 / DAY, p_plus, delta_plus: 1500.0, delta_minus: -1500.0, pi_plus: 10.0, pi_minus: -10.0 }
}

pub fn start(y: f64, d: f64) -> MarketState {
    MarketState::new(0.0, 0.0, y, d)
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Rounds to `digits` significant figures.
pub fn sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let e = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - e);
    (x * scale).round() / scale
}
