use intraday::closed_form::*;
use intraday::delay::{delay_constant, value_aux_delay};
use intraday::error_bounds::*;
use intraday::model::*;
use intraday::oracle::{argmin_gap, hjb_residual, jump_rate_forms_gap, rate_drift};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (
        (1e-3..1.0f64, 0.1..100.0f64, 1e-4..10.0f64, 0.1..500.0f64),
        (-0.1..0.1f64, 0.0..1e-3f64, 0.01..100.0f64, -1.0..=1.0f64, 600.0..2e5f64),
    )
        .prop_map(|((sigma0, sigma_d, beta, eta), (mu, nu, gamma, rho, horizon))| ModelParams {
            sigma0,
            sigma_d,
            beta: ProductionCost::Quadratic(beta),
            eta,
            mu,
            nu,
            gamma,
            rho,
            horizon,
        })
}

fn jumps() -> impl Strategy<Value = JumpParams> {
    (1e-6..1e-3f64, 0.0..=1.0f64, 1.0..5e3f64, -5e3..-1.0f64, 0.1..50.0f64, -50.0..-0.1f64).prop_map(
        |(lambda, p_plus, delta_plus, delta_minus, pi_plus, pi_minus)| JumpParams {
            lambda,
            p_plus,
            delta_plus,
            delta_minus,
            pi_plus,
            pi_minus,
        },
    )
}

/// `(params, tau, spread, y)` with `tau` inside the horizon.
fn point() -> impl Strategy<Value = (ModelParams, f64, f64, f64)> {
    (params(), 0.0..=1.0f64, -1e5..1e5f64, -100.0..200.0f64).prop_map(|(p, u, z, y)| (p, u * p.horizon, z, y))
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn constraint_only_matters_for_negative_spread(p in params(), d in -1e5..1e5f64) {
        let con = cost_after_production(d, &p, ProductionConstraint::NonNegative);
        let unc = cost_after_production(d, &p, ProductionConstraint::Relaxed);
        prop_assert!(con >= unc);
        let beta = p.beta.beta().unwrap();
        let gap = if d < 0.0 { p.eta * p.reduced_cost_coefficient() / (2.0 * beta) * d * d } else { 0.0 };
        prop_assert!((con - unc - gap).abs() <= 1e-9 * con.max(1.0));
        if d >= 0.0 {
            prop_assert_eq!(con, unc);
        }
    }

    #[test]
    fn production_minimises_terminal_cost(p in params(), d in -1e4..1e4f64) {
        let xi = optimal_production_unconstrained(d, &p);
        let best = terminal_cost(d, xi, &p).unwrap();
        prop_assert!((best - cost_after_production(d, &p, ProductionConstraint::Relaxed)).abs() <= 1e-9 * best.max(1.0));
        let width = d.abs().max(1.0);
        for i in 0..=200 {
            let trial = xi - width + 2.0 * width * i as f64 / 200.0;
            prop_assert!(terminal_cost(d, trial, &p).unwrap() >= best - 1e-9 * best.max(1.0));
        }
        let xc = optimal_production_constrained(d, &p);
        prop_assert!(xc >= 0.0);
        for i in 0..=200 {
            let trial = width * i as f64 / 100.0;
            prop_assert!(terminal_cost(d, trial, &p).unwrap() >= terminal_cost(d, xc, &p).unwrap() - 1e-9 * best.max(1.0));
        }
    }

    #[test]
    fn reduced_cost_is_monotone_and_bounded(eta in 1e-3..1e3f64, b1 in 1e-4..1e3f64, b2 in 1e-4..1e3f64) {
        let r = |b: f64| eta * b / (eta + b);
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(r(lo) <= r(hi));
        prop_assert!(r(b1) <= eta.min(b1) * (1.0 + 1e-15));
    }

    #[test]
    fn coefficient_signs((p, tau, _z, _y) in point()) {
        let c = riccati_coefficients(tau, &p);
        prop_assert!(c.a > 0.0);
        prop_assert!(c.b <= 0.0);
        let c0 = riccati_coefficients(0.0, &p);
        let c0 = c0.as_array();
        prop_assert!(rel(c0[0], 0.5 * p.reduced_cost_coefficient()) <= 1e-15);
        prop_assert!(c0[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn value_is_translation_invariant((p, tau, z, y) in point(), shift in -1e5..1e5f64, j in jumps()) {
        let s = MarketState::new(p.horizon - tau, 500.0, y, 500.0 + z);
        let moved = MarketState { x: s.x + shift, d: s.d + shift, ..s };
        prop_assert!(rel(value_aux(&s, &p), value_aux(&moved, &p)) <= 1e-9);
        let gap = value_aux_jump(&s, &p, &j) - value_aux(&s, &p);
        let gap_moved = value_aux_jump(&moved, &p, &j) - value_aux(&moved, &p);
        prop_assert!((gap - gap_moved).abs() <= 1e-9 * value_aux_jump(&s, &p, &j).abs().max(1.0));
    }

    #[test]
    fn zero_intensity_is_the_plain_model((p, tau, z, y) in point(), j in jumps()) {
        let off = JumpParams { lambda: 0.0, ..j };
        let s = MarketState::new(p.horizon - tau, 0.0, y, z);
        prop_assert_eq!(value_aux_jump(&s, &p, &off), value_aux(&s, &p));
        prop_assert_eq!(feedback_rate_jump(tau, z, y, &p, &off), feedback_rate(tau, z, y, &p));
        let jc = jump_riccati_coefficients(tau, &p, &off);
        prop_assert_eq!((jc.g_lambda, jc.h_lambda, jc.k_lambda), (jc.base.g, jc.base.h, jc.base.k));
    }

    #[test]
    fn closed_forms_solve_the_control_problem((p, u, z, y) in point(), j in jumps(), with_jumps in any::<bool>()) {
        // keep away from delivery, where the time difference is one-sided
        let tau = p.horizon * (0.05 + 0.95 * u / p.horizon);
        let j = if with_jumps { Some(j) } else { None };
        prop_assert!(hjb_residual(tau, z, y, &p, j.as_ref()) <= 1e-6);
        prop_assert!(argmin_gap(tau, z, y, &p, j.as_ref()) <= 1e-10);
        let (drift, scale) = rate_drift(tau, z, y, &p, j.as_ref());
        let expected = j.map_or(0.0, |j| -j.lambda * j.mean_price_jump() / (2.0 * p.gamma));
        prop_assert!((drift - expected).abs() <= 1e-10 * scale.max(expected.abs()));
        if let Some(j) = j {
            prop_assert!(jump_rate_forms_gap(tau, z, y, &p, &j) <= 1e-10);
        }
    }

    #[test]
    fn psi_reflection(z in -30.0..30.0f64) {
        prop_assert!((psi(z) + psi(-z) - (z * z + 1.0)).abs() <= 1e-12 * (z * z + 1.0));
        prop_assert!(psi(z) >= 0.0);
    }

    #[test]
    fn psi_tilde_positive_and_decreasing(z in 0.0..40.0f64, dz in 1e-3..1.0f64) {
        prop_assert!(psi_tilde(z) >= 0.0);
        prop_assert!(psi_tilde(z + dz) <= psi_tilde(z));
        prop_assert!(psi(z + dz) <= psi(z));
    }

    #[test]
    fn bound_is_a_valid_report((p, tau, z, y) in point()) {
        let b = error_bound(tau, z, y, &p).unwrap();
        prop_assert!(b.bound >= 0.0);
        prop_assert!((0.0..=1.0).contains(&b.shortfall_probability));
        prop_assert!(b.moments.variance >= 0.0);
        prop_assert_eq!(b.moments.variance == 0.0, tau == 0.0);
        // more spread means less shortfall
        let up = error_bound(tau, z + 1000.0 + z.abs(), y, &p).unwrap();
        if b.moments.mean > 0.0 {
            prop_assert!(up.bound <= b.bound);
        }
    }

    #[test]
    fn delay_never_helps((p, tau, z, y) in point(), frac in 0.0..=1.0f64) {
        let h = frac * p.horizon;
        let s = MarketState::new(p.horizon - tau, 0.0, y, z);
        let k = delay_constant(h, &p);
        prop_assert!(k >= 0.0);
        prop_assert_eq!(k == 0.0, h == 0.0);
        prop_assert!(value_aux_delay(&s, &p, h) >= value_aux(&s, &p));
        let k2 = delay_constant((h + 0.1 * p.horizon).min(p.horizon), &p);
        prop_assert!(k2 >= k);
    }

    #[test]
    fn pure_trader_value_dominates((p, tau, z, y) in point()) {
        let s = MarketState::new(p.horizon - tau, 0.0, y, z);
        let v = value_aux(&s, &p);
        prop_assert!(v <= value_pure_trader(&s, &p) + 1e-9 * v.abs().max(1.0));
    }
}
