use std::path::Path;
use std::process::Command as Process;

use intraday::closed_form::{jump_riccati_coefficients, riccati_coefficients, CoefficientSet};
use intraday::model::{JumpParams, ModelParams};
use intraday::oracle::ClosedFormSource;
use intraday::simulate::read_csv;
use intraday_cli::*;

fn run(args: &[&str]) -> Invocation {
    parse_and_run(std::iter::once("intraday").chain(args.iter().copied()))
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn tables_write_three_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let inv = run(&["tables", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Success, "{}", inv.stderr);
    let t1 = lines(&dir.path().join("table1.csv"));
    assert_eq!(t1[0], "T_h,shortfall_probability,value_eur,error_bound_eur");
    let values: Vec<&str> = t1[1..].iter().map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(values, ["1.88e6", "1.88e6", "1.89e6", "1.90e6"]);
    assert_eq!(t1[1], "1,<1e-16,1.88e6,<1e-16");
    let t2 = lines(&dir.path().join("table2.csv"));
    assert_eq!(t2.len(), 5);
    assert!(t2[1].starts_with("500,<1e-16,"));
    let t3 = lines(&dir.path().join("table3.csv"));
    assert_eq!(t3[4], "30,4.57e-10,1.29e6,1.30e-2");
    assert_eq!(t3[5], "20,2.23e-5,9.13e5,1.26e3");
}

#[test]
fn simulate_nojump_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let inv = run(&["simulate", "--scenario", "nojump", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Success, "{}", inv.stderr);
    let table = read_csv(&dir.path().join("nojump.csv")).unwrap();
    assert_eq!(table.paths.len(), 1);
    assert!(table.times.len() > 1440);
    assert_eq!(table.times[0], 0.0);
    assert_eq!(*table.times.last().unwrap(), 86_400.0);
    assert!(table.paths[0].q.iter().all(|q| q.is_finite()));
}

#[test]
fn jump_positive_paths_usually_jump() {
    let dir = tempfile::tempdir().unwrap();
    let n = 300;
    let mut with_jump = 0;
    for seed in 0..n {
        let cfg = RunConfig::load(Some("sim-jump-pos"), "sim-jump-pos", Some(seed), dir.path()).unwrap();
        let opts = SimulateOptions { stride: 1440, ..SimulateOptions::new(SimScenario::JumpPositive) };
        cmd_simulate(&cfg, &opts).unwrap();
        let table = read_csv(&dir.path().join("jump-positive.csv")).unwrap();
        if table.paths[0].jump_flag.iter().any(|&f| f != 0) {
            with_jump += 1;
        }
    }
    let expected = 1.0 - (-1.5f64).exp();
    let freq = with_jump as f64 / n as f64;
    let se = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((freq - expected).abs() < 4.0 * se, "{freq} vs {expected}");
}

#[test]
fn delay_production_recorded_at_decision_time() {
    let dir = tempfile::tempdir().unwrap();
    let inv = run(&["simulate", "--scenario", "delay", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Success, "{}", inv.stderr);
    let table = read_csv(&dir.path().join("delay.csv")).unwrap();
    let (row, _) = table.paths[0].decision.unwrap();
    assert_eq!(table.times[row], 72_000.0);
    let inv = run(&["simulate", "--scenario", "delay", "--delay-hours", "0", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Success);
    let table = read_csv(&dir.path().join("delay.csv")).unwrap();
    let (row, _) = table.paths[0].decision.unwrap();
    assert_eq!(table.times[row], 86_400.0);
}

#[test]
fn simulate_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for workers in ["1", "2", "8"] {
        let out = dir.path().join(workers);
        let inv = run(&[
            "simulate",
            "--scenario",
            "jump-negative",
            "--paths",
            "40",
            "--workers",
            workers,
            "--seed",
            "5",
            "--out",
            &out_arg(&out),
        ]);
        assert_eq!(inv.exit, Exit::Success, "{}", inv.stderr);
        files.push(std::fs::read(out.join("jump-negative.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn default_seed_is_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        run(&["simulate", "--paths", "3", "--out", &out_arg(&out)]);
        texts.push(std::fs::read(out.join("nojump.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let inv = run(&["simulate", "--paths", "3", "--out", &out_arg(dir.path())]);
    assert!(inv.stdout.contains(&format!("seed            {DEFAULT_SEED}")));
}

struct Skewed;

impl ClosedFormSource for Skewed {
    fn riccati(&self, tau: f64, params: &ModelParams) -> CoefficientSet {
        let c = riccati_coefficients(tau, params);
        CoefficientSet { a: 1.01 * c.a, ..c }
    }

    fn jump_riccati(&self, tau: f64, params: &ModelParams, jumps: &JumpParams) -> CoefficientSet {
        jump_riccati_coefficients(tau, params, jumps).corrected()
    }
}

fn quick_verify() -> VerifyCliOptions {
    VerifyCliOptions { paths: 2_000, ..VerifyCliOptions::default() }
}

#[test]
fn verify_flags_a_corrupted_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::load(None, "sim-nojump", None, dir.path()).unwrap();
    let out = cmd_verify_with(&cfg, &quick_verify(), &Skewed).unwrap();
    assert_eq!(out.exit, Exit::Verification);
    assert_eq!(out.exit.code(), 2);
    assert!(out.text.contains("FAIL  ode_riccati"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verification.json")).unwrap()).unwrap();
    let failed: Vec<&str> = json["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["ode_riccati"]);
}

#[test]
fn verify_zero_intensity_jumps_pass() {
    let dir = tempfile::tempdir().unwrap();
    let text = intraday::presets::preset_text("sim-jump-neg")
        .unwrap()
        .replace("\"lambda_per_day\": 1.5", "\"lambda_per_day\": 0");
    let path = dir.path().join("calm.json");
    std::fs::write(&path, text).unwrap();
    let cfg = RunConfig::load(path.to_str(), "sim-nojump", None, dir.path()).unwrap();
    assert_eq!(cfg.scenario.jumps.unwrap().lambda, 0.0);
    let out = cmd_verify(&cfg, &quick_verify()).unwrap();
    assert_eq!(out.exit, Exit::Success, "{}", out.text);
    assert!(out.text.contains("PASS  ode_jump_riccati"));
    assert!(out.text.contains("PASS  mc_cost_jump"));
    assert!(out.text.contains("expected slope 0.0"));
}

#[test]
fn errorbound_reports() {
    let dir = tempfile::tempdir().unwrap();
    let inv = run(&["errorbound", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Success, "{}", inv.stderr);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("errorbound.json")).unwrap()).unwrap();
    assert!(json["plain"]["bound"].as_f64().unwrap() <= 2.82e-10);
    assert!(json.get("jump").is_none());

    let inv = run(&["errorbound", "--delay-hours", "0", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Success);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("errorbound.json")).unwrap()).unwrap();
    let (a, b) = (json["plain"]["bound"].as_f64().unwrap(), json["delay"]["bound"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
    assert_eq!(json["plain"]["shortfall_probability"], json["delay"]["shortfall_probability"]);

    let inv = run(&["errorbound", "--config", "sim-jump-neg", "--samples", "2000", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Success);
    assert!(inv.stdout.contains("stderr"));
    let inv = run(&["errorbound", "--config", "sim-jump-neg", "--samples", "10", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Validation);
}

#[test]
fn delay_report_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let inv = run(&["delay", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Success, "{}", inv.stderr);
    assert!(inv.stdout.contains("1925460.22"));
    let grid = lines(&dir.path().join("delay.csv"));
    assert_eq!(grid.len(), 12);
    assert_eq!(grid[1], "0,0,1916704.4729753085");
    let ks: Vec<f64> = grid[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[1] > w[0]));
    let inv = run(&["delay", "--config", "sim-nojump", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Validation);
    let inv = run(&["delay", "--delay-hours", "30", "--out", &out_arg(dir.path())]);
    assert_eq!(inv.exit, Exit::Validation);
}

#[test]
fn validation_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["simulate", "--scenario", "bogus"]).exit, Exit::Validation);
    assert_eq!(run(&["frobnicate"]).exit, Exit::Validation);
    assert_eq!(run(&["tables", "--config", "/no/such/file.json"]).exit, Exit::Io);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"sigma0\": 1\n}").unwrap();
    let inv = run(&["tables", "--config", bad.to_str().unwrap()]);
    assert_eq!(inv.exit, Exit::Validation);
    assert!(inv.stderr.contains("line"), "{}", inv.stderr);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    assert_eq!(run(&["tables", "--out", &out_arg(&blocker.join("sub"))]).exit, Exit::Io);
    assert_eq!(run(&["simulate", "--dt", "7", "--out", &out_arg(dir.path())]).exit, Exit::Validation);
    assert_eq!(run(&["simulate", "--scenario", "jump-positive", "--config", "sim-nojump"]).exit, Exit::Validation);
    assert_eq!(run(&["--help"]).exit, Exit::Success);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_intraday");
    let status = |args: &[&str]| Process::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["verify", "--paths", "2000", "--out", &out_arg(dir.path())]), Some(0));
    assert!(dir.path().join("verification.txt").exists());
    assert!(dir.path().join("verification.json").exists());
    assert_eq!(status(&["simulate", "--scenario", "nope"]), Some(1));
    assert_eq!(status(&["tables", "--config", "/no/such/file.json"]), Some(3));
}
