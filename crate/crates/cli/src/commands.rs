use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::json;

use intraday::closed_form::{value_aux, value_aux_jump, value_pure_trader};
use intraday::delay::{
    composite_delay_policy, delay_constant, error_bound_delay, post_decision_mean_rate, value_aux_delay,
};
use intraday::error_bounds::{error_bound, error_bound_jump, DEFAULT_JUMP_SAMPLES};
use intraday::model::{ProductionConstraint, SECONDS_PER_HOUR};
use intraday::oracle::{run_verification, ClosedFormSource, LibraryClosedForms, ProbeOptions, VerifyOptions};
use intraday::simulate::{estimate_cost, export_csv, sample_paths, Policy, SimConfig, DEFAULT_STEP};

use crate::config::{InitialState, RunConfig};
use crate::tables::{compute_tables, render_sig3, write_table, BELOW_THRESHOLD, TABLE_THRESHOLD};
use crate::{ensure_dir, write_file, CliError, Exit, Output};

/// Writes `table1.csv`, `table2.csv` and `table3.csv`.
pub fn cmd_tables(cfg: &RunConfig) -> Result<Output, CliError> {
    let tables = compute_tables(&cfg.scenario.params)?;
    ensure_dir(&cfg.out)?;
    let mut text = String::new();
    let mut files = Vec::new();
    let small = |x: f64| if x.abs() < TABLE_THRESHOLD { BELOW_THRESHOLD.to_string() } else { render_sig3(x) };
    for t in &tables {
        let path = cfg.out.join(format!("{}.csv", t.name));
        write_table(t, &path)?;
        let _ = writeln!(text, "{} ({})", t.name, t.input_column);
        for r in &t.rows {
            let _ = writeln!(
                text,
                "  {:>10}  prob {:>9}  value {:>9}  bound {:>9}",
                r.input,
                small(r.shortfall_probability),
                render_sig3(r.value),
                small(r.bound)
            );
        }
        files.push(path);
    }
    Ok(Output::ok(text, files))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimScenario {
    NoJump,
    JumpPositive,
    JumpNegative,
    Delay,
}

impl SimScenario {
    pub const ALL: [SimScenario; 4] =
        [SimScenario::NoJump, SimScenario::JumpPositive, SimScenario::JumpNegative, SimScenario::Delay];

    pub fn name(self) -> &'static str {
        match self {
            SimScenario::NoJump => "nojump",
            SimScenario::JumpPositive => "jump-positive",
            SimScenario::JumpNegative => "jump-negative",
            SimScenario::Delay => "delay",
        }
    }

    /// Bundled parameters used when no `--config` is given.
    pub fn preset(self) -> &'static str {
        match self {
            SimScenario::NoJump => "sim-nojump",
            SimScenario::JumpPositive => "sim-jump-pos",
            SimScenario::JumpNegative => "sim-jump-neg",
            SimScenario::Delay => "sim-delay",
        }
    }
}

impl FromStr for SimScenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        SimScenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            let names: Vec<&str> = SimScenario::ALL.iter().map(|sc| sc.name()).collect();
            CliError::Validation(format!("unknown scenario `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    pub scenario: SimScenario,
    pub paths: usize,
    pub dt: f64,
    pub workers: Option<usize>,
    pub stride: usize,
    /// Clamp production at zero instead of using the relaxed rule.
    pub constrained: bool,
    /// Overrides the delay of the parameter file.
    pub delay_hours: Option<f64>,
    pub initial: InitialState,
}

impl SimulateOptions {
    pub fn new(scenario: SimScenario) -> Self {
        SimulateOptions {
            scenario,
            paths: 1,
            dt: DEFAULT_STEP,
            workers: None,
            stride: 1,
            constrained: false,
            delay_hours: None,
            initial: InitialState::default(),
        }
    }
}

fn delay_seconds(hours: Option<f64>, cfg: &RunConfig) -> Option<f64> {
    hours.map(|h| h * SECONDS_PER_HOUR).or(cfg.scenario.delay)
}

/// Simulates the scenario and writes `<scenario>.csv`.
pub fn cmd_simulate(cfg: &RunConfig, opts: &SimulateOptions) -> Result<Output, CliError> {
    let p = &cfg.scenario.params;
    let initial = opts.initial.state(&cfg.scenario)?;
    let constraint = if opts.constrained { ProductionConstraint::NonNegative } else { ProductionConstraint::Relaxed };
    let need_jumps = || {
        cfg.scenario
            .jumps
            .ok_or_else(|| CliError::Validation(format!("scenario `{}` needs jump parameters", opts.scenario.name())))
    };
    let (policy, jumps, reference) = match opts.scenario {
        SimScenario::NoJump if p.is_pure_trader() => (Policy::pure_trader(p), None, value_pure_trader(&initial, p)),
        SimScenario::NoJump => (Policy::optimal(p, constraint), None, value_aux(&initial, p)),
        SimScenario::JumpPositive | SimScenario::JumpNegative => {
            let j = need_jumps()?;
            (Policy::optimal_jump(p, &j, constraint), Some(j), value_aux_jump(&initial, p, &j))
        }
        SimScenario::Delay => {
            let h = delay_seconds(opts.delay_hours, cfg)
                .ok_or_else(|| CliError::Validation("scenario `delay` needs delay_hours or --delay-hours".into()))?;
            (composite_delay_policy(p, h, constraint)?, None, value_aux_delay(&initial, p, h))
        }
    };
    let mut config = SimConfig::new(opts.paths, opts.dt, cfg.seed).with_stride(opts.stride);
    config.workers = opts.workers;
    let paths = sample_paths(p, jumps.as_ref(), &policy, &initial, &config)?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join(format!("{}.csv", opts.scenario.name()));
    export_csv(&paths, &path)?;

    let est = estimate_cost(&paths, p)?;
    let jumps_seen: usize = paths.paths.iter().map(|x| x.jumps.len()).sum();
    let mut text = String::new();
    let _ = writeln!(text, "scenario        {} ({})", opts.scenario.name(), cfg.source);
    let _ = writeln!(text, "paths           {}", opts.paths);
    let _ = writeln!(text, "seed            {}", cfg.seed);
    let _ = writeln!(text, "mean cost       {:.2} +- {:.2} EUR", est.mean, est.stderr);
    let _ = writeln!(text, "closed form     {reference:.2} EUR");
    if jumps.is_some() {
        let _ = writeln!(text, "jumps           {jumps_seen}");
    }
    if let Some(first) = paths.paths.first() {
        let _ = writeln!(
            text,
            "production      {:.4} MW at t = {} s",
            first.outcome.production,
            paths_decision_time(&paths)
        );
    }
    let _ = writeln!(text, "wrote           {}", path.display());
    Ok(Output::ok(text, vec![path]))
}

fn paths_decision_time(paths: &intraday::simulate::PathSet) -> f64 {
    let node = paths.paths[0].outcome.decision_node;
    paths.times[paths.row_at_or_after(node)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyCliOptions {
    pub paths: usize,
    pub dt: f64,
    pub ode_nodes: usize,
    pub fuzz_points: usize,
    pub probe: Option<ProbeOptions>,
    pub initial: InitialState,
}

impl Default for VerifyCliOptions {
    fn default() -> Self {
        let d = VerifyOptions::default();
        VerifyCliOptions {
            paths: d.n_paths,
            dt: d.dt,
            ode_nodes: d.ode_nodes,
            fuzz_points: d.fuzz_points,
            probe: None,
            initial: InitialState::default(),
        }
    }
}

/// Runs the verification suite against the library closed forms.
pub fn cmd_verify(cfg: &RunConfig, opts: &VerifyCliOptions) -> Result<Output, CliError> {
    cmd_verify_with(cfg, opts, &LibraryClosedForms)
}

/// Like [`cmd_verify`] with the checked closed forms taken from `source`.
/// Writes `verification.txt` and `verification.json`.
pub fn cmd_verify_with(
    cfg: &RunConfig,
    opts: &VerifyCliOptions,
    source: &dyn ClosedFormSource,
) -> Result<Output, CliError> {
    let initial = opts.initial.state(&cfg.scenario)?;
    if opts.paths < 2 || opts.ode_nodes == 0 || opts.fuzz_points == 0 {
        return Err(CliError::Validation("verify needs at least 2 paths, 1 ODE node and 1 fuzz point".into()));
    }
    if let Some(probe) = opts.probe {
        if !(probe.epsilon > 0.0 && probe.epsilon.is_finite()) || probe.n_paths < 2 {
            return Err(CliError::Validation(format!(
                "probe needs a positive epsilon and at least 2 paths, got {} and {}",
                probe.epsilon, probe.n_paths
            )));
        }
    }
    let options = VerifyOptions {
        n_paths: opts.paths,
        dt: opts.dt,
        seed: cfg.seed,
        ode_nodes: opts.ode_nodes,
        fuzz_points: opts.fuzz_points,
        probe: opts.probe,
    };
    let report = run_verification(&cfg.scenario, &initial, &options, source);
    ensure_dir(&cfg.out)?;
    let text = format!("parameters {} seed {}\n{}", cfg.source, cfg.seed, report.to_text());
    let txt = cfg.out.join("verification.txt");
    let js = cfg.out.join("verification.json");
    write_file(&txt, &text)?;
    write_file(&js, &report.to_json())?;
    let exit = if report.all_passed() { Exit::Success } else { Exit::Verification };
    Ok(Output { text, files: vec![txt, js], exit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundOptions {
    pub initial: InitialState,
    pub delay_hours: Option<f64>,
    /// Monte Carlo samples for the jump bound.
    pub samples: usize,
}

impl Default for ErrorBoundOptions {
    fn default() -> Self {
        ErrorBoundOptions { initial: InitialState::default(), delay_hours: None, samples: DEFAULT_JUMP_SAMPLES }
    }
}

/// Reports the relaxation bounds for the configured state and writes
/// `errorbound.json`.
pub fn cmd_errorbound(cfg: &RunConfig, opts: &ErrorBoundOptions) -> Result<Output, CliError> {
    let p = &cfg.scenario.params;
    let s = opts.initial.state(&cfg.scenario)?;
    let tau = s.time_to_go(p);
    let plain = error_bound(tau, s.spread(), s.y, p)?;
    let mut text = String::new();
    let line = |text: &mut String, label: &str, bound: f64, prob: f64| {
        let _ = writeln!(text, "{label:<8} bound {bound:.6e} EUR  shortfall probability {prob:.6e}");
    };
    line(&mut text, "plain", plain.bound, plain.shortfall_probability);
    let mut doc = json!({ "source": cfg.source, "state": s, "plain": plain });
    if let Some(j) = cfg.scenario.jumps.filter(|j| j.lambda > 0.0) {
        let b = error_bound_jump(tau, s.spread(), s.y, p, &j, opts.samples, cfg.seed)?;
        line(&mut text, "jump", b.bound, b.shortfall_probability);
        let _ = writeln!(text, "         stderr {:.3e} EUR over {} samples", b.mc_stderr, opts.samples);
        doc["jump"] = json!(b);
    }
    if let Some(h) = delay_seconds(opts.delay_hours, cfg) {
        let b = error_bound_delay(&s, p, h)?;
        line(&mut text, "delay", b.bound, b.shortfall_probability);
        let _ = writeln!(text, "         h = {} s", h);
        doc["delay"] = json!(b);
        doc["delay_seconds"] = json!(h);
    }
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join("errorbound.json");
    write_file(&path, &serde_json::to_string_pretty(&doc).expect("report serializes"))?;
    Ok(Output::ok(text, vec![path]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayOptions {
    pub initial: InitialState,
    pub delay_hours: Option<f64>,
    /// Intervals of the `h` grid written to `delay.csv`.
    pub grid_points: usize,
}

impl Default for DelayOptions {
    fn default() -> Self {
        DelayOptions { initial: InitialState::default(), delay_hours: None, grid_points: 10 }
    }
}

/// Value of deciding production early, with `K_h` over a grid of delays in
/// `delay.csv` and a summary in `delay.json`.
pub fn cmd_delay(cfg: &RunConfig, opts: &DelayOptions) -> Result<Output, CliError> {
    let p = &cfg.scenario.params;
    let s = opts.initial.state(&cfg.scenario)?;
    let h = delay_seconds(opts.delay_hours, cfg).ok_or_else(|| {
        CliError::Validation("no delay: set delay_hours in the parameters or pass --delay-hours".into())
    })?;
    if p.is_pure_trader() {
        return Err(intraday::delay::DelayError::PureTrader.into());
    }
    if opts.grid_points == 0 {
        return Err(CliError::Validation("grid needs at least one interval".into()));
    }
    let bound = error_bound_delay(&s, p, h)?;
    let rate = post_decision_mean_rate(&s, p, h)?;
    let (v0, vh, k) = (value_aux(&s, p), value_aux_delay(&s, p, h), delay_constant(h, p));

    let mut text = String::new();
    let _ = writeln!(text, "delay             {h} s ({} h)", h / SECONDS_PER_HOUR);
    let _ = writeln!(text, "value no delay    {v0:.2} EUR");
    let _ = writeln!(text, "value with delay  {vh:.2} EUR");
    let _ = writeln!(text, "K_h               {k:.6} EUR");
    let _ = writeln!(text, "post-decision     {rate:.6e} MW/s mean rate");
    let _ = writeln!(
        text,
        "bound             {:.6e} EUR  shortfall probability {:.6e}",
        bound.bound, bound.shortfall_probability
    );

    ensure_dir(&cfg.out)?;
    let csv_path = cfg.out.join("delay.csv");
    let mut csv = String::from("h_hours,k_h_eur,value_eur\n");
    for i in 0..=opts.grid_points {
        let hi = p.horizon * i as f64 / opts.grid_points as f64;
        let _ = writeln!(csv, "{},{},{}", hi / SECONDS_PER_HOUR, delay_constant(hi, p), value_aux_delay(&s, p, hi));
    }
    write_file(&csv_path, &csv)?;
    let json_path = cfg.out.join("delay.json");
    let doc = json!({
        "source": cfg.source,
        "state": s,
        "delay_seconds": h,
        "value": v0,
        "value_delay": vh,
        "k_h": k,
        "post_decision_mean_rate": rate,
        "bound": bound,
    });
    write_file(&json_path, &serde_json::to_string_pretty(&doc).expect("report serializes"))?;
    Ok(Output::ok(text, vec![csv_path, json_path]))
}
