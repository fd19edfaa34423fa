mod common;

use common::*;
use intraday::closed_form::{expected_rate_turning_time, value_aux, value_aux_jump, value_pure_trader};
use intraday::model::{ModelParams, ProductionConstraint};
use intraday::presets::{load_preset, standard_initial_state};
use intraday::simulate::*;

fn relaxed() -> ProductionConstraint {
    ProductionConstraint::Relaxed
}

#[test]
fn no_jump_cost_matches_value() {
    let sc = load_preset("sim-nojump").unwrap();
    let s = standard_initial_state();
    let out = sample_outcomes(
        &sc.params,
        None,
        &Policy::optimal(&sc.params, relaxed()),
        &s,
        &SimConfig::new(10_000, 60.0, 1),
    )
    .unwrap();
    let est = CostEstimate::from_outcomes(&out, &sc.params).unwrap();
    assert!(est.within(value_aux(&s, &sc.params), 3.0), "{est:?}");
}

#[test]
fn jump_costs_match_values() {
    for name in ["sim-jump-pos", "sim-jump-neg"] {
        let sc = load_preset(name).unwrap();
        let j = sc.jumps.unwrap();
        let s = standard_initial_state();
        let pol = Policy::optimal_jump(&sc.params, &j, relaxed());
        let out = sample_outcomes(&sc.params, Some(&j), &pol, &s, &SimConfig::new(10_000, 60.0, 2)).unwrap();
        let est = CostEstimate::from_outcomes(&out, &sc.params).unwrap();
        assert!(est.within(value_aux_jump(&s, &sc.params, &j), 3.0), "{name}: {est:?}");
        let mean_jumps = out.iter().map(|o| o.jump_count as f64).sum::<f64>() / out.len() as f64;
        assert!((mean_jumps - 1.5).abs() < 0.05, "{mean_jumps}");
    }
}

#[test]
fn pure_trader_cost_matches_value() {
    let p = ModelParams { horizon: 2.0 * HOUR, ..trading_day(200.0) };
    let s = start(50.0, 3000.0);
    let out = sample_outcomes(&p, None, &Policy::pure_trader(&p), &s, &SimConfig::new(10_000, 60.0, 4)).unwrap();
    assert!(out.iter().all(|o| o.production == 0.0));
    let est = CostEstimate::from_outcomes(&out, &p).unwrap();
    assert!(est.within(value_pure_trader(&s, &p), 3.0), "{est:?} vs {}", value_pure_trader(&s, &p));
}

#[test]
fn refinement_removes_final_step_bias() {
    // an agent without production pays for the untraded last-step noise
    let p = ModelParams { horizon: 2.0 * HOUR, ..trading_day(200.0) };
    let s = start(50.0, 3000.0);
    let cfg = SimConfig { refine_near_delivery: false, ..SimConfig::new(4_000, 60.0, 4) };
    let out = sample_outcomes(&p, None, &Policy::pure_trader(&p), &s, &cfg).unwrap();
    let est = CostEstimate::from_outcomes(&out, &p).unwrap();
    let bias = 0.5 * p.eta * p.sigma_d * p.sigma_d * 60.0;
    assert!(est.mean - value_pure_trader(&s, &p) > 0.5 * bias);
}

#[test]
fn rate_is_a_martingale_without_jumps() {
    let sc = load_preset("sim-nojump").unwrap();
    let paths = sample_paths(
        &sc.params,
        None,
        &Policy::optimal(&sc.params, relaxed()),
        &standard_initial_state(),
        &SimConfig::new(10_000, 60.0, 5).with_stride(10),
    )
    .unwrap();
    let m = martingale_diagnostics(&paths, &sc.params, None);
    assert_eq!(m.expected, 0.0);
    assert!(m.contains_expected(), "{m:?}");
}

#[test]
fn rate_drifts_with_jumps() {
    for name in ["sim-jump-pos", "sim-jump-neg"] {
        let sc = load_preset(name).unwrap();
        let j = sc.jumps.unwrap();
        let paths = sample_paths(
            &sc.params,
            Some(&j),
            &Policy::optimal_jump(&sc.params, &j, relaxed()),
            &standard_initial_state(),
            &SimConfig::new(10_000, 60.0, 6).with_stride(10),
        )
        .unwrap();
        let m = martingale_diagnostics(&paths, &sc.params, Some(&j));
        assert!(m.contains_expected(), "{name}: {m:?}");
        assert!(m.ci_low > 0.0 || m.ci_high < 0.0, "{name}: drift not resolved {m:?}");
    }
}

#[test]
fn mean_rate_turns_at_predicted_time() {
    let sc = load_preset("sim-jump-pos").unwrap();
    let j = sc.jumps.unwrap();
    let s = standard_initial_state();
    let turn = expected_rate_turning_time(&s, &sc.params, &j).unwrap().time;
    let paths = sample_paths(
        &sc.params,
        Some(&j),
        &Policy::optimal_jump(&sc.params, &j, relaxed()),
        &s,
        &SimConfig::new(4_000, 60.0, 8).with_stride(60),
    )
    .unwrap();
    let mean_q = |t: f64| {
        let row = paths.row_at_or_after((t / paths.dt) as usize);
        paths.paths.iter().map(|p| p.q[row]).sum::<f64>() / paths.paths.len() as f64
    };
    assert!(mean_q(0.5 * turn) > 0.0);
    assert!(mean_q(turn + 4.0 * HOUR) < 0.0);
    // mean inventory peaks near the turning time
    let mean_x: Vec<f64> = (0..paths.times.len())
        .map(|i| paths.paths.iter().map(|p| p.x[i]).sum::<f64>() / paths.paths.len() as f64)
        .collect();
    let peak = mean_x.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!((paths.times[peak] - turn).abs() < 2.0 * HOUR, "{} vs {turn}", paths.times[peak]);
}

#[test]
fn workers_do_not_change_paths() {
    let sc = load_preset("sim-jump-neg").unwrap();
    let j = sc.jumps.unwrap();
    let pol = Policy::optimal_jump(&sc.params, &j, relaxed());
    let run = |w: usize| {
        sample_paths(
            &sc.params,
            Some(&j),
            &pol,
            &standard_initial_state(),
            &SimConfig::new(64, 60.0, 9).with_workers(w),
        )
        .unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(8));
    assert_ne!(
        one,
        sample_paths(&sc.params, Some(&j), &pol, &standard_initial_state(), &SimConfig::new(64, 60.0, 10)).unwrap()
    );
}

#[test]
fn outcomes_agree_with_recorded_paths() {
    let sc = load_preset("sim-delay").unwrap();
    let h = sc.delay.unwrap();
    let pol = intraday::delay::composite_delay_policy(&sc.params, h, relaxed()).unwrap();
    let cfg = SimConfig::new(16, 60.0, 12).with_stride(7);
    let s = standard_initial_state();
    let paths = sample_paths(&sc.params, None, &pol, &s, &cfg).unwrap();
    let outs = sample_outcomes(&sc.params, None, &pol, &s, &cfg).unwrap();
    for (p, o) in paths.paths.iter().zip(&outs) {
        assert_eq!(p.outcome, *o);
        assert_eq!(*p.x.last().unwrap(), o.terminal.x);
    }
    assert_eq!(*paths.times.last().unwrap(), sc.params.horizon);
    assert_eq!(paths.times.len(), paths.nodes.len());
    assert!(paths.nodes.contains(&1400));
}

#[test]
fn csv_round_trip() {
    let sc = load_preset("sim-jump-pos").unwrap();
    let j = sc.jumps.unwrap();
    let pol = Policy::optimal_jump(&sc.params, &j, relaxed());
    let paths =
        sample_paths(&sc.params, Some(&j), &pol, &standard_initial_state(), &SimConfig::new(20, 60.0, 13)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("paths.csv");
    export_csv(&paths, &file).unwrap();
    let table = read_csv(&file).unwrap();
    assert_eq!(table.times, paths.times);
    assert_eq!(table.paths.len(), 20);
    for (i, (c, p)) in table.paths.iter().zip(&paths.paths).enumerate() {
        assert_eq!(c.path_id, i);
        assert_eq!(c.x, p.x);
        assert_eq!(c.y, p.y);
        assert_eq!(c.d, p.d);
        assert_eq!(c.p_hat, p.p_hat);
        assert_eq!(c.q, p.q);
        assert_eq!(c.decision, Some((paths.times.len() - 1, p.outcome.production)));
        let flagged: i32 = c.jump_flag.iter().sum();
        let signed: i32 = p.jumps.iter().map(|m| i32::from(m.sign)).sum();
        assert_eq!(flagged, signed);
        assert!(p.jumps.iter().all(|m| m.sign == 1));
    }
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("time_s,path_id,X,Y,D,P_hat,q,jump_flag,xi_at_decision\n"));
}

#[test]
fn delay_decision_is_recorded_early() {
    let sc = load_preset("sim-delay").unwrap();
    let h = sc.delay.unwrap();
    assert_eq!(h, 4.0 * HOUR);
    let pol = intraday::delay::composite_delay_policy(&sc.params, h, relaxed()).unwrap();
    let paths = sample_paths(&sc.params, None, &pol, &standard_initial_state(), &SimConfig::new(3, 60.0, 14)).unwrap();
    let mut buf = Vec::new();
    write_csv(&paths, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let decided: Vec<&str> = text.lines().skip(1).filter(|l| !l.ends_with(',')).collect();
    assert_eq!(decided.len(), 3);
    for line in decided {
        assert!(line.starts_with("72000,"), "{line}");
    }
}

#[test]
fn price_forecast_excludes_impact() {
    let p = ModelParams { nu: 1e-3, horizon: HOUR, ..trading_day(200.0) };
    let paths =
        sample_paths(&p, None, &Policy::optimal(&p, relaxed()), &start(50.0, 5000.0), &SimConfig::new(4, 60.0, 15))
            .unwrap();
    for path in &paths.paths {
        for i in 0..paths.times.len() {
            let impact = p.nu * path.x[i];
            assert!((path.y[i] - path.p_hat[i] - impact).abs() < 1e-9 * path.y[i].abs().max(1.0));
        }
    }
}

#[test]
fn idle_policy_never_trades() {
    let p = trading_day(200.0);
    let paths = sample_paths(&p, None, &Policy::idle(&p), &start(50.0, 0.0), &SimConfig::new(5, 600.0, 16)).unwrap();
    assert!(paths.paths.iter().all(|x| x.x.iter().all(|&v| v == 0.0) && x.realized_cost >= 0.0));
}

#[test]
fn configuration_errors() {
    let p = trading_day(200.0);
    let s = start(50.0, 0.0);
    let pol = Policy::idle(&p);
    assert!(matches!(sample_paths(&p, None, &pol, &s, &SimConfig::new(0, 60.0, 1)), Err(SimError::NoPaths)));
    assert!(matches!(
        sample_paths(&p, None, &pol, &s, &SimConfig::new(1, 60.0, 1).with_stride(0)),
        Err(SimError::InvalidStride)
    ));
    assert!(matches!(sample_paths(&p, None, &pol, &s, &SimConfig::new(1, -1.0, 1)), Err(SimError::InvalidStep(_))));
    let bad = ModelParams { gamma: -1.0, ..p };
    assert!(matches!(sample_paths(&bad, None, &pol, &s, &SimConfig::new(1, 60.0, 1)), Err(SimError::Model(_))));
    let missing = std::path::Path::new("/nonexistent/dir/paths.csv");
    assert!(matches!(read_csv(missing), Err(SimError::Io { .. })));
}

#[test]
fn inventory_follows_recorded_rates() {
    let sc = load_preset("sim-jump-neg").unwrap();
    let j = sc.jumps.unwrap();
    let paths = sample_paths(
        &sc.params,
        Some(&j),
        &Policy::optimal_jump(&sc.params, &j, relaxed()),
        &standard_initial_state(),
        &SimConfig::new(8, 60.0, 21),
    )
    .unwrap();
    // base nodes are all present, refined ones only near delivery
    assert!(paths.times.len() > 1441);
    assert!(paths.times.iter().take(1433).enumerate().all(|(k, &t)| t == k as f64 * 60.0));
    for p in &paths.paths {
        for k in 0..paths.times.len() - 1 {
            let dt = paths.times[k + 1] - paths.times[k];
            let expected = p.x[k] + p.q[k] * dt;
            assert!((p.x[k + 1] - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }
}

#[test]
fn price_and_demand_increments() {
    let p = ModelParams { horizon: HOUR, ..trading_day(200.0) };
    let paths =
        sample_paths(&p, None, &Policy::optimal(&p, relaxed()), &start(50.0, 5000.0), &SimConfig::new(2_000, 60.0, 22))
            .unwrap();
    let mut dy = Vec::new();
    let mut dd = Vec::new();
    let mut cross = Vec::new();
    for path in &paths.paths {
        for k in 0..40 {
            let h = paths.times[k + 1] - paths.times[k];
            let ey = (path.y[k + 1] - path.y[k] - p.nu * path.q[k] * h) / h.sqrt();
            let ed = (path.d[k + 1] - path.d[k] - p.mu * h) / h.sqrt();
            dy.push(ey);
            dd.push(ed);
            cross.push(ey * ed);
        }
    }
    let y = CostEstimate::from_samples(&dy);
    let d = CostEstimate::from_samples(&dd);
    assert!(y.within(0.0, 3.0) && d.within(0.0, 3.0));
    let var = |v: &[f64]| v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64;
    assert!(rel(var(&dy), p.sigma0 * p.sigma0) < 0.02);
    assert!(rel(var(&dd), p.sigma_d * p.sigma_d) < 0.02);
    let c = CostEstimate::from_samples(&cross);
    assert!(c.within(p.rho * p.sigma0 * p.sigma_d, 3.0), "{c:?}");
}

#[test]
fn constrained_imbalance_has_fixed_share() {
    let sc = load_preset("sim-nojump").unwrap();
    let p = sc.params;
    let beta = 0.002;
    let out = sample_outcomes(
        &p,
        None,
        &Policy::optimal(&p, ProductionConstraint::NonNegative),
        &standard_initial_state(),
        &SimConfig::new(200, 60.0, 24),
    )
    .unwrap();
    for o in &out {
        let spread = o.terminal.spread();
        assert!(o.production > 0.0);
        let expected = beta / (p.eta + beta) * spread;
        assert!((spread - o.production - expected).abs() < 1e-9 * spread.abs());
    }
}

#[test]
fn cost_converges_as_step_shrinks() {
    let p = ModelParams { horizon: 2.0 * HOUR, ..trading_day(100.0) };
    let s = start(50.0, 5000.0);
    let v = value_aux(&s, &p);
    for dt in [60.0, 10.0, 1.0] {
        let out =
            sample_outcomes(&p, None, &Policy::optimal(&p, relaxed()), &s, &SimConfig::new(2_000, dt, 25)).unwrap();
        let est = CostEstimate::from_outcomes(&out, &p).unwrap();
        assert!(est.within(v, 3.0), "dt {dt}: {est:?} vs {v}");
    }
}
