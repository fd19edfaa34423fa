//! Fixed-step RK4 integration of the Riccati systems in time-to-go.

use serde::Serialize;

use super::OracleError;
use crate::closed_form::{jump_riccati_coefficients, riccati_coefficients, CoefficientSet};
use crate::model::{JumpParams, ModelParams};

/// Variable the integrator steps in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeScale {
    /// Uniform steps in time-to-go.
    Linear,
    /// Uniform steps in `u = ln(1 + (r + nu) tau / (2 gamma))`.
    ///
    /// The coefficients vary on the scale `2 gamma / (r + nu)` near `tau = 0`
    /// and on the scale `tau` further out; in `u` both are of order one.
    Logarithmic,
}

/// Above this ratio of `(r + nu) tau_max` to `2 gamma` the system counts as
/// stiff and comparisons use the looser tolerance.
pub const STIFFNESS_THRESHOLD: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeSolution {
    pub tau: Vec<f64>,
    /// With jumps, `g`, `h`, `k` hold the jump-corrected coefficients.
    pub values: Vec<CoefficientSet>,
    /// Step in the integration variable.
    pub step: f64,
    pub scale: TimeScale,
    pub with_jumps: bool,
}

#[derive(Debug, Clone, Copy)]
struct System {
    r: f64,
    nu: f64,
    gamma: f64,
    mu: f64,
    s0: f64,
    sd: f64,
    rho: f64,
    jumps: Option<JumpParams>,
}

impl System {
    fn new(params: &ModelParams, jumps: Option<&JumpParams>) -> Self {
        System {
            r: params.reduced_cost_coefficient(),
            nu: params.nu,
            gamma: params.gamma,
            mu: params.mu,
            s0: params.sigma0,
            sd: params.sigma_d,
            rho: params.rho,
            jumps: jumps.copied(),
        }
    }

    /// Derivative in time-to-go of `[A, B, F, G, H, K]`.
    fn rhs(&self, y: &[f64; 6]) -> [f64; 6] {
        let [a, b, f, g, h, _] = *y;
        let (nu, gamma, mu) = (self.nu, self.gamma, self.mu);
        let e1 = -2.0 * a + nu * f;
        let e2 = 2.0 * nu * b - f + 1.0;
        let e3 = -g + nu * h;
        let mut d = [
            -e1 * e1 / (4.0 * gamma),
            -e2 * e2 / (4.0 * gamma),
            -e1 * e2 / (2.0 * gamma),
            2.0 * mu * a - e1 * e3 / (2.0 * gamma),
            mu * f - e2 * e3 / (2.0 * gamma),
            mu * g + self.s0 * self.s0 * b + self.sd * self.sd * a + self.rho * self.s0 * self.sd * f
                - e3 * e3 / (4.0 * gamma),
        ];
        if let Some(j) = self.jumps {
            let (pp, pm) = (j.p_plus, j.p_minus());
            let delta = j.mean_demand_jump();
            let pi = j.mean_price_jump();
            let lam = j.lambda;
            d[3] += lam * (2.0 * delta * a + pi * f);
            d[4] += lam * (2.0 * pi * b + delta * f);
            d[5] += lam
                * ((pp * j.delta_plus * j.delta_plus + pm * j.delta_minus * j.delta_minus) * a
                    + (pp * j.pi_plus * j.pi_plus + pm * j.pi_minus * j.pi_minus) * b
                    + (pp * j.delta_plus * j.pi_plus + pm * j.delta_minus * j.pi_minus) * f
                    + delta * g
                    + pi * h);
        }
        d
    }
}

fn axpy(y: &[f64; 6], k: &[f64; 6], s: f64) -> [f64; 6] {
    let mut out = *y;
    for i in 0..6 {
        out[i] += s * k[i];
    }
    out
}

fn integrate(
    params: &ModelParams,
    jumps: Option<&JumpParams>,
    tau_max: f64,
    n_steps: usize,
    scale: TimeScale,
) -> Result<OdeSolution, OracleError> {
    if !(tau_max > 0.0 && tau_max.is_finite()) || n_steps == 0 {
        return Err(OracleError::InvalidStep(tau_max / n_steps.max(1) as f64));
    }
    let sys = System::new(params, jumps);
    let a_ = sys.r + sys.nu;
    let c = 2.0 * sys.gamma;
    // map from the integration variable to time-to-go and its derivative
    let (span, to_tau): (f64, TauMap) = match scale {
        TimeScale::Linear => (tau_max, Box::new(|s| (s, 1.0))),
        TimeScale::Logarithmic => (
            (a_ * tau_max / c).ln_1p(),
            Box::new(move |u: f64| {
                let tau = c / a_ * u.exp_m1();
                (tau, (c + a_ * tau) / a_)
            }),
        ),
    };
    let h = span / n_steps as f64;
    let field = |s: f64, y: &[f64; 6]| {
        let (_, jac) = to_tau(s);
        let mut d = sys.rhs(y);
        for v in d.iter_mut() {
            *v *= jac;
        }
        d
    };
    let mut y = [0.5 * sys.r, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut taus = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    taus.push(0.0);
    values.push(CoefficientSet::from_array(y));
    for i in 0..n_steps {
        let s = i as f64 * h;
        let k1 = field(s, &y);
        let k2 = field(s + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = field(s + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = field(s + h, &axpy(&y, &k3, h));
        for j in 0..6 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let s_next = if i + 1 == n_steps { span } else { (i + 1) as f64 * h };
        let tau = if i + 1 == n_steps { tau_max } else { to_tau(s_next).0 };
        if let Some(j) = y.iter().position(|v| !v.is_finite() || v.abs() > 1e250) {
            return Err(OracleError::Blowup { tau, coefficient: ["A", "B", "F", "G", "H", "K"][j] });
        }
        taus.push(tau);
        values.push(CoefficientSet::from_array(y));
    }
    Ok(OdeSolution { tau: taus, values, step: h, scale, with_jumps: jumps.is_some() })
}

fn steps_for(tau_max: f64, step: f64) -> Result<usize, OracleError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(OracleError::InvalidStep(step));
    }
    Ok(((tau_max / step).ceil() as usize).max(1))
}

/// Integrates the no-jump system from `tau = 0` to `tau_max`.
///
/// The number of steps is `ceil(tau_max / step)`, laid out uniformly in
/// logarithmic time. Coefficients that vanish like `tau^2` at delivery keep
/// their relative accuracy this way; uniform steps in `tau` lose it on the
/// first node.
type TauMap = Box<dyn Fn(f64) -> (f64, f64)>;

pub fn integrate_riccati(params: &ModelParams, tau_max: f64, step: f64) -> Result<OdeSolution, OracleError> {
    let n = steps_for(tau_max, step)?;
    integrate(params, None, tau_max, n, TimeScale::Logarithmic)
}

pub fn integrate_jump_riccati(
    params: &ModelParams,
    jumps: &JumpParams,
    tau_max: f64,
    step: f64,
) -> Result<OdeSolution, OracleError> {
    let n = steps_for(tau_max, step)?;
    integrate(params, Some(jumps), tau_max, n, TimeScale::Logarithmic)
}

/// Explicit choice of step count and scale.
pub fn integrate_with(
    params: &ModelParams,
    jumps: Option<&JumpParams>,
    tau_max: f64,
    n_steps: usize,
    scale: TimeScale,
) -> Result<OdeSolution, OracleError> {
    integrate(params, jumps, tau_max, n_steps, scale)
}

/// Largest relative deviation per coefficient between an ODE solution and
/// closed-form values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeComparison {
    pub max_relative: [f64; 6],
    pub worst_tau: [f64; 6],
}

impl OdeComparison {
    pub fn max_error(&self) -> f64 {
        self.max_relative.iter().cloned().fold(0.0, f64::max)
    }
}

fn relative(num: f64, exact: f64) -> f64 {
    let diff = (num - exact).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / exact.abs()
    }
}

pub fn compare_with(solution: &OdeSolution, closed: &dyn Fn(f64) -> CoefficientSet) -> OdeComparison {
    let mut out = OdeComparison { max_relative: [0.0; 6], worst_tau: [0.0; 6] };
    for (tau, num) in solution.tau.iter().zip(&solution.values) {
        let exact = closed(*tau).as_array();
        for (i, v) in num.as_array().iter().enumerate() {
            let e = relative(*v, exact[i]);
            if e > out.max_relative[i] || e.is_nan() {
                out.max_relative[i] = if e.is_nan() { f64::INFINITY } else { e };
                out.worst_tau[i] = *tau;
            }
        }
    }
    out
}

pub fn compare_riccati(solution: &OdeSolution, params: &ModelParams) -> OdeComparison {
    compare_with(solution, &|tau| riccati_coefficients(tau, params))
}

pub fn compare_jump_riccati(solution: &OdeSolution, params: &ModelParams, jumps: &JumpParams) -> OdeComparison {
    compare_with(solution, &|tau| jump_riccati_coefficients(tau, params, jumps).corrected())
}
