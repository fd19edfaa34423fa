//! The full verification suite and its report.

use std::fmt::Write as _;

use serde::Serialize;

use super::identities::{argmin_gap, forecast_gap, fuzz_points, hjb_residual, jump_rate_forms_gap, rate_drift};
use super::ode::{compare_with, integrate_jump_riccati, integrate_riccati, STIFFNESS_THRESHOLD};
use super::probe::{optimality_probe, ProbeSetup};
use super::quadrature::variance_by_quadrature;
use crate::closed_form::{
    jump_riccati_coefficients, riccati_coefficients, value_aux, value_aux_jump, value_pure_trader, CoefficientSet,
};
use crate::delay::{composite_delay_policy, delay_constant, value_aux_delay};
use crate::error_bounds::variance_spread;
use crate::model::{JumpParams, MarketState, ModelParams, ProductionConstraint, Scenario};
use crate::simulate::{estimate_cost, martingale_diagnostics_window, sample_paths, Policy, SimConfig};

/// Where the checked closed-form coefficients come from.
pub trait ClosedFormSource: Sync {
    fn riccati(&self, tau: f64, params: &ModelParams) -> CoefficientSet;
    fn jump_riccati(&self, tau: f64, params: &ModelParams, jumps: &JumpParams) -> CoefficientSet;
}

/// The closed forms of this crate.
pub struct LibraryClosedForms;

impl ClosedFormSource for LibraryClosedForms {
    fn riccati(&self, tau: f64, params: &ModelParams) -> CoefficientSet {
        riccati_coefficients(tau, params)
    }

    fn jump_riccati(&self, tau: f64, params: &ModelParams, jumps: &JumpParams) -> CoefficientSet {
        jump_riccati_coefficients(tau, params, jumps).corrected()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Observed error or statistic.
    pub metric: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let _ = write!(out, "{mark}  {:<34} metric={:<12.4e} tol={:<10.3e}", c.name, c.metric, c.tolerance);
            if let Some((lo, hi)) = c.interval {
                let _ = write!(out, " ci=[{lo:.6e}, {hi:.6e}]");
            }
            let _ = writeln!(out, "  {}", c.detail);
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub epsilon: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub ode_nodes: usize,
    pub fuzz_points: usize,
    pub probe: Option<ProbeOptions>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            n_paths: 10_000,
            dt: 60.0,
            seed: DEFAULT_VERIFY_SEED,
            ode_nodes: 10_000,
            fuzz_points: 1_000,
            probe: None,
        }
    }
}

pub const DEFAULT_VERIFY_SEED: u64 = 20_240_601;

/// Tolerance of the ODE comparison for these parameters.
pub fn ode_tolerance(params: &ModelParams) -> f64 {
    let ratio = (params.reduced_cost_coefficient() + params.nu) * params.horizon / (2.0 * params.gamma);
    if ratio > STIFFNESS_THRESHOLD {
        1e-5
    } else {
        1e-8
    }
}

fn check(name: &str, metric: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult { name: name.to_string(), passed: metric <= tolerance, metric, tolerance, interval: None, detail }
}

fn worst(points: &[(f64, f64, f64)], f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    points.iter().map(|&(t, z, y)| f(t, z, y)).fold(0.0, |m, e| if e.is_nan() { f64::INFINITY } else { m.max(e) })
}

/// Runs every closed-form identity, the ODE and quadrature cross-checks and
/// the Monte Carlo consistency checks for `scenario` started at `initial`.
pub fn run_verification(
    scenario: &Scenario,
    initial: &MarketState,
    options: &VerifyOptions,
    source: &dyn ClosedFormSource,
) -> VerificationReport {
    let p = &scenario.params;
    let jumps = scenario.jumps.as_ref();
    let mut checks = Vec::new();
    let step = p.horizon / options.ode_nodes as f64;
    let tol = ode_tolerance(p);

    match integrate_riccati(p, p.horizon, step) {
        Ok(sol) => {
            let cmp = compare_with(&sol, &|tau| source.riccati(tau, p));
            checks.push(check(
                "ode_riccati",
                cmp.max_error(),
                tol,
                format!("{} nodes, {:?} scale", sol.tau.len(), sol.scale),
            ));
        }
        Err(e) => checks.push(check("ode_riccati", f64::INFINITY, tol, e.to_string())),
    }
    if let Some(j) = jumps {
        match integrate_jump_riccati(p, j, p.horizon, step) {
            Ok(sol) => {
                let cmp = compare_with(&sol, &|tau| source.jump_riccati(tau, p, j));
                checks.push(check("ode_jump_riccati", cmp.max_error(), tol, format!("{} nodes", sol.tau.len())));
            }
            Err(e) => checks.push(check("ode_jump_riccati", f64::INFINITY, tol, e.to_string())),
        }
    }

    let mut quad_err: f64 = 0.0;
    for tau in [1.0, 3600.0, 86_400.0, p.horizon] {
        let closed = variance_spread(tau, p);
        let quad = variance_by_quadrature(0.0, tau, p).value;
        quad_err = quad_err.max(((closed - quad) / quad).abs());
    }
    checks.push(check("variance_quadrature", quad_err, 1e-10, "tau in {1s, 1h, 24h, T}".into()));

    let pts = fuzz_points(p, options.fuzz_points, options.seed);
    checks.push(check(
        "hjb_residual",
        worst(&pts, |t, z, y| hjb_residual(t, z, y, p, jumps)),
        1e-6,
        format!("{} points", pts.len()),
    ));
    checks.push(check(
        "argmin_consistency",
        worst(&pts, |t, z, y| argmin_gap(t, z, y, p, jumps)),
        1e-10,
        String::new(),
    ));
    let expected_drift = jumps.map_or(0.0, |j| -j.lambda * j.mean_price_jump() / (2.0 * p.gamma));
    checks.push(check(
        "rate_drift_identity",
        worst(&pts, |t, z, y| {
            let (drift, scale) = rate_drift(t, z, y, p, jumps);
            (drift - expected_drift).abs() / scale.max(expected_drift.abs()).max(f64::MIN_POSITIVE)
        }),
        1e-10,
        format!("expected drift {expected_drift:.6e}"),
    ));
    checks.push(check("forecast_equilibrium", worst(&pts, |t, z, y| forecast_gap(t, z, y, p)), 1e-9, String::new()));
    if let Some(j) = jumps {
        checks.push(check(
            "jump_rate_forms",
            worst(&pts, |t, z, y| jump_rate_forms_gap(t, z, y, p, j)),
            1e-10,
            String::new(),
        ));
    }
    let mut translation: f64 = 0.0;
    for &(t, z, y) in &pts {
        let s = MarketState::new(p.horizon - t, 1000.0, y, 1000.0 + z);
        let shifted = MarketState { x: s.x + 12_345.0, d: s.d + 12_345.0, ..s };
        let (a, b) = (value_aux(&s, p), value_aux(&shifted, p));
        translation = translation.max((a - b).abs() / a.abs().max(1.0));
    }
    checks.push(check("translation_invariance", translation, 1e-9, String::new()));

    if !p.is_pure_trader() {
        checks.extend(delay_checks(p, &pts));
    }
    checks.extend(monte_carlo_checks(scenario, initial, options));
    VerificationReport { checks }
}

fn delay_checks(p: &ModelParams, pts: &[(f64, f64, f64)]) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(check("delay_constant_at_zero", delay_constant(0.0, p).abs(), 0.0, String::new()));
    let grid: Vec<f64> = (1..=10).map(|i| p.horizon * i as f64 / 10.0).collect();
    let ks: Vec<f64> = grid.iter().map(|&h| delay_constant(h, p)).collect();
    let increasing = ks.windows(2).all(|w| w[1] > w[0]) && ks[0] > 0.0;
    out.push(CheckResult {
        name: "delay_constant_increasing".into(),
        passed: increasing,
        metric: ks.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max),
        tolerance: 0.0,
        interval: None,
        detail: "10-point grid up to T".into(),
    });
    let h = p.horizon / 6.0;
    let k = delay_constant(h, p);
    let gap = worst(pts, |t, z, y| {
        let s = MarketState::new(p.horizon - t, 0.0, y, z);
        ((value_aux_delay(&s, p, h) - value_aux(&s, p)) - k).abs() / k.abs().max(1.0)
    });
    out.push(check("delay_value_state_free", gap, 1e-9, format!("h = {h} s")));
    out
}

fn monte_carlo_checks(scenario: &Scenario, initial: &MarketState, options: &VerifyOptions) -> Vec<CheckResult> {
    let p = &scenario.params;
    let mut out = Vec::new();
    let relaxed = ProductionConstraint::Relaxed;
    let (policy, reference, jumps, label, window_end): (Policy, f64, Option<&JumpParams>, &str, f64) =
        match (scenario.delay, scenario.jumps.as_ref()) {
            (Some(h), _) if !p.is_pure_trader() => match composite_delay_policy(p, h, relaxed) {
                Ok(pol) => (pol, value_aux_delay(initial, p, h), None, "delay", p.horizon - h),
                Err(e) => {
                    out.push(check("mc_cost_delay", f64::INFINITY, 3.0, e.to_string()));
                    return out;
                }
            },
            (_, Some(j)) => {
                (Policy::optimal_jump(p, j, relaxed), value_aux_jump(initial, p, j), Some(j), "jump", p.horizon)
            }
            _ if p.is_pure_trader() => {
                (Policy::pure_trader(p), value_pure_trader(initial, p), None, "pure_trader", p.horizon)
            }
            _ => (Policy::optimal(p, relaxed), value_aux(initial, p), None, "no_jump", p.horizon),
        };
    let config = SimConfig::new(options.n_paths, options.dt, options.seed).with_stride(10);
    match sample_paths(p, jumps, &policy, initial, &config) {
        Ok(paths) => {
            match estimate_cost(&paths, p) {
                Ok(est) => {
                    let z = (est.mean - reference).abs() / est.stderr;
                    out.push(CheckResult {
                        name: format!("mc_cost_{label}"),
                        passed: z <= 3.0,
                        metric: z,
                        tolerance: 3.0,
                        interval: Some((est.mean - 3.0 * est.stderr, est.mean + 3.0 * est.stderr)),
                        detail: format!("closed form {reference:.2}, estimate {:.2} +- {:.2}", est.mean, est.stderr),
                    });
                }
                Err(e) => out.push(check(&format!("mc_cost_{label}"), f64::INFINITY, 3.0, e.to_string())),
            }
            let m = martingale_diagnostics_window(&paths, p, jumps, 0.0, window_end);
            out.push(CheckResult {
                name: format!("martingale_{label}"),
                passed: m.contains_expected(),
                metric: m.slope,
                tolerance: 3.0 * m.stderr,
                interval: Some((m.ci_low, m.ci_high)),
                detail: format!("expected slope {:.6e}", m.expected),
            });
        }
        Err(e) => out.push(check(&format!("mc_cost_{label}"), f64::INFINITY, 3.0, e.to_string())),
    }
    if let Some(probe) = options.probe {
        let setup = ProbeSetup { initial: *initial, n_paths: probe.n_paths, dt: options.dt, seed: options.seed };
        match optimality_probe(p, jumps, &policy, probe.epsilon, &setup) {
            Ok(report) => {
                for r in &report.profiles {
                    out.push(CheckResult {
                        name: format!("probe_{:?}", r.profile).to_lowercase(),
                        passed: r.significant(3.0) && r.quadratic(0.2),
                        metric: r.ratio,
                        tolerance: 0.8,
                        interval: Some((
                            r.increase.mean - 3.0 * r.increase.stderr,
                            r.increase.mean + 3.0 * r.increase.stderr,
                        )),
                        detail: format!("increase {:.3e} +- {:.1e}", r.increase.mean, r.increase.stderr),
                    });
                }
            }
            Err(e) => out.push(check("probe", f64::INFINITY, 0.0, e.to_string())),
        }
    }
    out
}
