//! Gaussian error calculus for the relaxed production constraint.
//!
//! Under the optimal trading rate the terminal spread `D_T - X_T` is normal
//! with mean [`mean_spread`] and variance [`variance_spread`]. The price paid
//! for solving the relaxed problem instead of the constrained one is then
//! controlled by `psi`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{JumpParams, ModelParams};
use crate::rng::{keyed_rng, stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("error bounds need a finite production cost (pure trader has no production error)")]
    PureTrader,
    #[error("at least {min} Monte Carlo samples are required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("delay {h} s outside [0, {tau}]")]
    DelayOutOfRange { h: f64, tau: f64 },
}

pub const MIN_JUMP_SAMPLES: usize = 1_000;
pub const DEFAULT_JUMP_SAMPLES: usize = 100_000;
const SAMPLE_CHUNK: usize = 4_096;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SERIES_FROM: f64 = 8.0;

pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// `sum_{k>=1} (-1)^{k+1} 2k (2k-1)!! / z^{2k+1}`, so that `psi = pdf * series`.
fn psi_series(z: f64) -> f64 {
    let inv2 = 1.0 / (z * z);
    let mut double_fact = 1.0;
    let mut power = inv2 / z;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        double_fact *= 2.0 * kf - 1.0;
        let term = 2.0 * kf * double_fact * power;
        sum += sign * term;
        if term < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
        power *= inv2;
    }
    sum
}

/// `sum_{n>=1} (-1)^{n+1} (2n-1)!! / z^{2n}`, so that `psi_tilde = pdf * series`.
fn psi_tilde_series(z: f64) -> f64 {
    let inv2 = 1.0 / (z * z);
    let mut double_fact = 1.0;
    let mut power = inv2;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for n in 1..40 {
        double_fact *= 2.0 * n as f64 - 1.0;
        let term = double_fact * power;
        sum += sign * term;
        if term < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
        power *= inv2;
    }
    sum
}

/// `psi(z) = (z^2 + 1) Phi(-z) - z phi(z)`, i.e. `E[(z + N)^2 1{z + N < 0}]`.
pub fn psi(z: f64) -> f64 {
    if z >= SERIES_FROM {
        normal_pdf(z) * psi_series(z)
    } else {
        (z * z + 1.0) * normal_cdf(-z) - z * normal_pdf(z)
    }
}

/// Natural logarithm of [`psi`], finite far beyond the underflow of `psi`.
pub fn ln_psi(z: f64) -> f64 {
    if z >= SERIES_FROM {
        -0.5 * z * z - LN_SQRT_2PI + psi_series(z).ln()
    } else {
        psi(z).ln()
    }
}

/// `psi_tilde(z) = phi(z) - z Phi(-z)`, i.e. `E[-(z + N) 1{z + N < 0}]`.
pub fn psi_tilde(z: f64) -> f64 {
    if z >= SERIES_FROM {
        normal_pdf(z) * psi_tilde_series(z)
    } else {
        normal_pdf(z) - z * normal_cdf(-z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpreadMoments {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    /// Upper bound on the extra cost of the constrained problem, EUR.
    pub bound: f64,
    pub shortfall_probability: f64,
    pub moments: SpreadMoments,
    /// Standard error of `bound` when it is a Monte Carlo estimate.
    pub mc_stderr: f64,
}

/// Expected terminal spread under the optimal rate.
pub fn mean_spread(tau: f64, spread: f64, y: f64, params: &ModelParams) -> f64 {
    let r = params.reduced_cost_coefficient();
    let den = (r + params.nu) * tau + 2.0 * params.gamma;
    ((params.nu * tau + 2.0 * params.gamma) * (params.mu * tau + spread) + y * tau) / den
}

/// Antiderivative of the terminal-spread variance density, from 0 to `tau`.
///
/// The density is `N(s) / (a s + c)^2` with `a = r + nu`, `c = 2 gamma` and
/// `N` quadratic; in `u = a s + c` it splits into a constant, a `1/u` and a
/// `1/u^2` part.
pub fn variance_spread(tau: f64, params: &ModelParams) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let r = params.reduced_cost_coefficient();
    let (s0, sd, rho, nu) = (params.sigma0, params.sigma_d, params.rho, params.nu);
    let a = r + nu;
    let c = 2.0 * params.gamma;
    let alpha = s0 * s0 + sd * sd * nu * nu + 2.0 * rho * s0 * sd * nu;
    // N and N' at the double pole s = -c/a
    let n_pole = (c / a) * (c / a) * (s0 * s0 + sd * sd * r * r - 2.0 * rho * s0 * sd * r);
    let dn_pole = 2.0 * c / a * (-s0 * s0 + sd * sd * nu * r + rho * s0 * sd * (r - nu));
    let linear = alpha * tau / (a * a);
    let log = dn_pole / (a * a) * (a * tau / c).ln_1p();
    let pole = n_pole * tau / (c * (c + a * tau));
    (linear + log + pole).max(0.0)
}

/// `(eta r / (2 beta))`, the factor in front of every bound.
fn bound_factor(params: &ModelParams) -> Result<f64, BoundError> {
    let beta = params.beta.beta().ok_or(BoundError::PureTrader)?;
    Ok(params.eta * params.reduced_cost_coefficient() / (2.0 * beta))
}

/// `E[M^2 1{M<0}]` and `P(M<0)` for `M ~ N(mean, variance)`.
pub(crate) fn gaussian_shortfall(mean: f64, variance: f64) -> (f64, f64) {
    if variance <= 0.0 {
        return if mean < 0.0 { (mean * mean, 1.0) } else { (0.0, 0.0) };
    }
    let z = mean / variance.sqrt();
    (variance * psi(z), normal_cdf(-z))
}

pub fn error_bound(tau: f64, spread: f64, y: f64, params: &ModelParams) -> Result<ErrorBoundReport, BoundError> {
    let factor = bound_factor(params)?;
    let moments = SpreadMoments { mean: mean_spread(tau, spread, y, params), variance: variance_spread(tau, params) };
    let (second, prob) = gaussian_shortfall(moments.mean, moments.variance);
    Ok(ErrorBoundReport { bound: factor * second, shortfall_probability: prob, moments, mc_stderr: 0.0 })
}

/// `ln` of the bound of [`error_bound`], usable where the bound underflows.
pub fn ln_error_bound(tau: f64, spread: f64, y: f64, params: &ModelParams) -> Result<f64, BoundError> {
    let factor = bound_factor(params)?;
    let m = mean_spread(tau, spread, y, params);
    let v = variance_spread(tau, params);
    Ok(factor.ln() + v.ln() + ln_psi(m / v.sqrt()))
}

/// Limiting exponential rates of the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConstants {
    /// Limit of `tau * ln(bound)` as the time-to-go shrinks.
    pub near_delivery: f64,
    /// Limit of `ln(bound) / spread^2` as the spread grows.
    pub large_spread: f64,
    /// Limit of `ln(bound) / y^2` as the price grows.
    pub large_price: f64,
}

pub fn asymptotic_rate_constants(tau: f64, spread: f64, _y: f64, params: &ModelParams) -> RateConstants {
    let r = params.reduced_cost_coefficient();
    let den = (r + params.nu) * tau + 2.0 * params.gamma;
    let v = variance_spread(tau, params);
    let m_inf = (params.nu * tau + 2.0 * params.gamma) / den;
    let n_inf = tau / den;
    let scaled = spread / params.sigma_d;
    RateConstants {
        near_delivery: -0.5 * scaled * scaled,
        large_spread: -0.5 * m_inf * m_inf / v,
        large_price: -0.5 * n_inf * n_inf / v,
    }
}

/// `tau - (c/a) ln(1 + a tau / c)` without cancellation for small `a tau / c`.
fn tau_minus_log(tau: f64, a: f64, c: f64) -> f64 {
    let x = a * tau / c;
    if x < 1e-3 {
        // x - ln(1+x) = x^2/2 - x^3/3 + x^4/4 - ...
        let mut sum = 0.0;
        let mut p = x * x;
        for n in 2..12 {
            let term = p / n as f64;
            sum += if n % 2 == 0 { term } else { -term };
            p *= x;
        }
        c / a * sum
    } else {
        tau - c / a * x.ln_1p()
    }
}

/// Expected terminal spread with jumps, including the compensated drift.
pub fn mean_spread_jump(tau: f64, spread: f64, y: f64, params: &ModelParams, jumps: &JumpParams) -> f64 {
    let lam = jumps.lambda;
    if lam == 0.0 {
        return mean_spread(tau, spread, y, params);
    }
    let r = params.reduced_cost_coefficient();
    let a = r + params.nu;
    let c = 2.0 * params.gamma;
    let (delta, pi) = (jumps.mean_demand_jump(), jumps.mean_price_jump());
    mean_spread(tau, spread, y + lam * (0.5 * pi - r * delta) * tau, params)
        + lam * (r * delta - pi) / a * tau_minus_log(tau, a, c)
}

/// Shift of the terminal spread caused by one jump `(delta, pi)` arriving
/// with `u` seconds to go.
pub(crate) fn jump_spread_impact(u: f64, delta: f64, pi: f64, params: &ModelParams) -> f64 {
    let r = params.reduced_cost_coefficient();
    (delta * (params.nu * u + 2.0 * params.gamma) + pi * u) / ((r + params.nu) * u + 2.0 * params.gamma)
}

/// Bound with jumps: `psi` averaged over the negative-jump contribution.
///
/// Positive jumps only push the terminal spread up and are dropped, which
/// keeps the estimate an upper bound. Samples are drawn in fixed chunks with
/// their own random streams, so the result depends on `seed` only.
pub fn error_bound_jump(
    tau: f64,
    spread: f64,
    y: f64,
    params: &ModelParams,
    jumps: &JumpParams,
    n_samples: usize,
    seed: u64,
) -> Result<ErrorBoundReport, BoundError> {
    if n_samples < MIN_JUMP_SAMPLES {
        return Err(BoundError::TooFewSamples { min: MIN_JUMP_SAMPLES, got: n_samples });
    }
    let factor = bound_factor(params)?;
    let moments =
        SpreadMoments { mean: mean_spread_jump(tau, spread, y, params, jumps), variance: variance_spread(tau, params) };
    let negative_rate = jumps.lambda * jumps.p_minus() * tau;
    if negative_rate == 0.0 || moments.variance <= 0.0 {
        let (second, prob) = gaussian_shortfall(moments.mean, moments.variance);
        return Ok(ErrorBoundReport { bound: factor * second, shortfall_probability: prob, moments, mc_stderr: 0.0 });
    }
    let sd = moments.variance.sqrt();
    let poisson = Poisson::new(negative_rate).expect("positive Poisson mean");
    let n_chunks = n_samples.div_ceil(SAMPLE_CHUNK);
    let partial: Vec<[f64; 3]> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = keyed_rng(seed, chunk as u64, stream::BOUND_SAMPLES);
            let len = SAMPLE_CHUNK.min(n_samples - chunk * SAMPLE_CHUNK);
            let mut acc = [0.0; 3];
            for _ in 0..len {
                let count = poisson.sample(&mut rng) as u64;
                let mut shift = 0.0;
                for _ in 0..count {
                    let u = tau * rng.random::<f64>();
                    shift += jump_spread_impact(u, jumps.delta_minus, jumps.pi_minus, params);
                }
                let z = (moments.mean + shift) / sd;
                let value = psi(z);
                acc[0] += value;
                acc[1] += value * value;
                acc[2] += normal_cdf(-z);
            }
            acc
        })
        .collect();
    let mut total = [0.0; 3];
    for p in &partial {
        for i in 0..3 {
            total[i] += p[i];
        }
    }
    let n = n_samples as f64;
    let mean = total[0] / n;
    let var = ((total[1] / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let scale = factor * moments.variance;
    Ok(ErrorBoundReport {
        bound: scale * mean,
        shortfall_probability: total[2] / n,
        moments,
        mc_stderr: scale * (var / n).sqrt(),
    })
}
