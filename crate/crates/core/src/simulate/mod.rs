//! Euler simulation of inventory, price and demand forecast under a policy.

mod diagnostics;
mod export;
mod policy;

pub use diagnostics::{
    estimate_cost, martingale_diagnostics, martingale_diagnostics_window, CostEstimate, MartingaleReport,
};
pub use export::{export_csv, read_csv, write_csv, CsvPath, CsvTable};
pub use policy::{Policy, ProductionRule, RateRule};

use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{terminal_cost, JumpParams, MarketState, ModelError, ModelParams};
use crate::rng::{keyed_rng, stream};

/// Largest step accepted with jumps unless explicitly overridden.
pub const MAX_JUMP_STEP: f64 = 60.0;
pub const DEFAULT_STEP: f64 = 60.0;
/// Near delivery the grid is refined so that no step exceeds this fraction
/// of the time-to-go at its start.
pub const SUBSTEP_FRACTION: f64 = 0.125;
/// Smallest refined step, seconds.
pub const MIN_SUBSTEP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("time step {dt} s does not divide the horizon {horizon} s")]
    StepDoesNotDivide { dt: f64, horizon: f64 },
    #[error("time step {dt} s exceeds {max} s with jumps; jump placement error would be large (override with allow_coarse_jump_step)")]
    CoarseJumpStep { dt: f64, max: f64 },
    #[error("at least one path is required")]
    NoPaths,
    #[error("record stride must be at least 1")]
    InvalidStride,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("could not start worker pool: {0}")]
    Workers(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Keep every `record_stride`-th grid node (the last node is always kept).
    pub record_stride: usize,
    pub allow_coarse_jump_step: bool,
    /// Add geometrically shrinking steps in the last `dt` intervals.
    ///
    /// A rate frozen over a whole step leaves the noise of the final step
    /// untraded, which costs about `eta sigma_d^2 dt / 2` for an agent that
    /// cannot produce. The extra nodes remove this bias. They are ordinary
    /// grid nodes: they are recorded and the base nodes `k dt` all remain.
    pub refine_near_delivery: bool,
}

impl SimConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64) -> Self {
        SimConfig {
            n_paths,
            dt,
            seed,
            workers: None,
            record_stride: 1,
            allow_coarse_jump_step: false,
            refine_near_delivery: true,
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        SimConfig { workers: Some(workers), ..self }
    }

    pub fn with_stride(self, record_stride: usize) -> Self {
        SimConfig { record_stride, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpMark {
    /// Arrival time, seconds.
    pub time: f64,
    /// Grid node at which the jump enters the state.
    pub node: usize,
    pub sign: i8,
}

/// What is left of a path once it reached delivery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathOutcome {
    pub terminal: MarketState,
    pub production: f64,
    /// Grid node of the production decision.
    pub decision_node: usize,
    /// Left-Riemann sum of `q (Y + gamma q) dt` on the full grid.
    pub running_cost: f64,
    pub jump_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub q: Vec<f64>,
    pub jumps: Vec<JumpMark>,
    pub outcome: PathOutcome,
    /// Running cost plus terminal cost.
    pub realized_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub dt: f64,
    pub horizon: f64,
    /// Recorded grid nodes and their times.
    pub nodes: Vec<usize>,
    pub times: Vec<f64>,
    pub paths: Vec<SimulatedPath>,
}

impl PathSet {
    /// Index of the first recorded row at or after grid node `node`.
    pub fn row_at_or_after(&self, node: usize) -> usize {
        self.nodes.partition_point(|&n| n < node).min(self.nodes.len() - 1)
    }
}

struct Grid {
    /// Node times, `0 = t_0 < ... < t_n = T`.
    times: Vec<f64>,
    /// Base step.
    dt: f64,
}

impl Grid {
    fn new(params: &ModelParams, jumps: Option<&JumpParams>, config: &SimConfig) -> Result<Grid, SimError> {
        params.validate()?;
        if let Some(j) = jumps {
            j.validate()?;
        }
        let dt = config.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::InvalidStep(dt));
        }
        if config.n_paths == 0 {
            return Err(SimError::NoPaths);
        }
        if config.record_stride == 0 {
            return Err(SimError::InvalidStride);
        }
        let n = (params.horizon / dt).round();
        if n < 1.0 || (n * dt - params.horizon).abs() > 1e-9 * params.horizon {
            return Err(SimError::StepDoesNotDivide { dt, horizon: params.horizon });
        }
        if jumps.is_some_and(|j| j.lambda > 0.0) && dt > MAX_JUMP_STEP && !config.allow_coarse_jump_step {
            return Err(SimError::CoarseJumpStep { dt, max: MAX_JUMP_STEP });
        }
        Ok(Grid::build(n as usize, params.horizon, config.refine_near_delivery))
    }

    /// `n` uniform steps over `[0, horizon]`, the last ones split
    /// geometrically when `refine` is set.
    fn build(n: usize, horizon: f64, refine: bool) -> Grid {
        let dt = horizon / n as f64;
        let uniform = |k: usize| if k == n { horizon } else { k as f64 * dt };
        let mut times = vec![0.0];
        for k in 0..n {
            let (t0, t1) = (uniform(k), uniform(k + 1));
            if refine && (horizon - t0) * SUBSTEP_FRACTION < t1 - t0 {
                let mut t = t0;
                loop {
                    t += ((horizon - t) * SUBSTEP_FRACTION).max(MIN_SUBSTEP);
                    if t >= t1 - 1e-12 * dt {
                        break;
                    }
                    times.push(t);
                }
            }
            times.push(t1);
        }
        Grid { times, dt }
    }

    fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    fn horizon(&self) -> f64 {
        self.times[self.n_steps()]
    }

    /// Last node at or before `production_time`.
    fn decision_node(&self, production_time: f64) -> usize {
        let k = self.times.partition_point(|&t| t <= production_time + 1e-9 * self.dt);
        k.saturating_sub(1)
    }

    /// First node at or after `t`, never the initial one.
    fn node_at_or_after(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s < t).clamp(1, self.n_steps())
    }

    fn recorded_nodes(&self, stride: usize) -> Vec<usize> {
        let last = self.n_steps();
        let mut nodes: Vec<usize> = (0..=last).step_by(stride).collect();
        if *nodes.last().unwrap() != last {
            nodes.push(last);
        }
        nodes
    }
}

struct Recorder {
    stride: usize,
    last: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    p_hat: Vec<f64>,
    q: Vec<f64>,
}

impl Recorder {
    fn new(stride: usize, last: usize, rows: usize) -> Self {
        let v = || Vec::with_capacity(rows);
        Recorder { stride, last, x: v(), y: v(), d: v(), p_hat: v(), q: v() }
    }

    fn push(&mut self, k: usize, s: &MarketState, p_hat: f64, q: f64) {
        if k % self.stride == 0 || k == self.last {
            self.x.push(s.x);
            self.y.push(s.y);
            self.d.push(s.d);
            self.p_hat.push(p_hat);
            self.q.push(q);
        }
    }
}

fn jump_schedule(grid: &Grid, jumps: Option<&JumpParams>, seed: u64, path_id: u64) -> Vec<JumpMark> {
    let Some(j) = jumps.filter(|j| j.lambda > 0.0) else {
        return Vec::new();
    };
    let mut times = keyed_rng(seed, path_id, stream::JUMP_TIMES);
    let mut signs = keyed_rng(seed, path_id, stream::JUMP_SIGNS);
    let gap = Exp::new(j.lambda).expect("positive intensity");
    let mut marks = Vec::new();
    let mut t: f64 = gap.sample(&mut times);
    while t <= grid.horizon() {
        let node = grid.node_at_or_after(t);
        let sign = if signs.random::<f64>() < j.p_plus { 1 } else { -1 };
        marks.push(JumpMark { time: t, node, sign });
        t += gap.sample(&mut times);
    }
    marks
}

struct Engine<'a> {
    params: &'a ModelParams,
    jumps: Option<&'a JumpParams>,
    policy: &'a Policy,
    initial: &'a MarketState,
    grid: Grid,
    seed: u64,
}

fn run_path(engine: &Engine<'_>, path_id: u64, mut recorder: Option<&mut Recorder>) -> (PathOutcome, Vec<JumpMark>) {
    let Engine { params, jumps, policy, initial, ref grid, seed } = *engine;
    let marks = jump_schedule(grid, jumps, seed, path_id);
    let mut w = keyed_rng(seed, path_id, stream::PRICE_NOISE);
    let mut w_perp = keyed_rng(seed, path_id, stream::DEMAND_NOISE);
    let decision = grid.decision_node(policy.production_time());
    let rho_perp = (1.0 - params.rho * params.rho).max(0.0).sqrt();

    let mut s = MarketState { t: 0.0, ..*initial };
    let mut p_hat = initial.y;
    let mut committed = None;
    let mut running = 0.0;
    let mut next_mark = 0;
    let last = grid.n_steps();
    for k in 0..=last {
        s.t = grid.time(k);
        if k == decision {
            committed = Some(policy.decide_production(&s));
        }
        let q = policy.rate(&s, committed);
        if let Some(rec) = recorder.as_deref_mut() {
            rec.push(k, &s, p_hat, q);
        }
        if k == last {
            break;
        }
        let h = grid.time(k + 1) - s.t;
        running += q * (s.y + params.gamma * q) * h;
        let sqrt_h = h.sqrt();
        let z: f64 = StandardNormal.sample(&mut w);
        let dw = sqrt_h * z;
        let z_perp: f64 = StandardNormal.sample(&mut w_perp);
        let db = params.rho * dw + rho_perp * sqrt_h * z_perp;
        s.x += q * h;
        s.y += params.nu * q * h + params.sigma0 * dw;
        p_hat += params.sigma0 * dw;
        s.d += params.mu * h + params.sigma_d * db;
        while next_mark < marks.len() && marks[next_mark].node == k + 1 {
            let j = jumps.expect("marks imply jump parameters");
            let (delta, pi) =
                if marks[next_mark].sign > 0 { (j.delta_plus, j.pi_plus) } else { (j.delta_minus, j.pi_minus) };
            s.d += delta;
            s.y += pi;
            p_hat += pi;
            next_mark += 1;
        }
    }
    let outcome = PathOutcome {
        terminal: s,
        production: committed.unwrap_or(0.0),
        decision_node: decision,
        running_cost: running,
        jump_count: marks.len() as u32,
    };
    (outcome, marks)
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| SimError::Workers(e.to_string()))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Simulates `config.n_paths` paths from `initial` (its `t` is ignored; paths
/// start at time 0) and records them on the grid.
///
/// Each path draws from its own random streams keyed by `(seed, path_id)`, so
/// the output does not depend on the number of workers.
pub fn sample_paths(
    params: &ModelParams,
    jumps: Option<&JumpParams>,
    policy: &Policy,
    initial: &MarketState,
    config: &SimConfig,
) -> Result<PathSet, SimError> {
    let grid = Grid::new(params, jumps, config)?;
    let nodes = grid.recorded_nodes(config.record_stride);
    let times = nodes.iter().map(|&k| grid.time(k)).collect();
    let (dt, horizon, last) = (grid.dt, grid.horizon(), grid.n_steps());
    let engine = Engine { params, jumps, policy, initial, grid, seed: config.seed };
    let paths = in_pool(config.workers, || {
        (0..config.n_paths)
            .into_par_iter()
            .map(|id| {
                let mut rec = Recorder::new(config.record_stride, last, nodes.len());
                let (outcome, jumps_hit) = run_path(&engine, id as u64, Some(&mut rec));
                let terminal = terminal_cost(outcome.terminal.spread(), outcome.production, params)?;
                Ok(SimulatedPath {
                    x: rec.x,
                    y: rec.y,
                    d: rec.d,
                    p_hat: rec.p_hat,
                    q: rec.q,
                    jumps: jumps_hit,
                    realized_cost: outcome.running_cost + terminal,
                    outcome,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()
    })??;
    Ok(PathSet { dt, horizon, nodes, times, paths })
}

/// Like [`sample_paths`] but keeps only the terminal outcome of each path.
pub fn sample_outcomes(
    params: &ModelParams,
    jumps: Option<&JumpParams>,
    policy: &Policy,
    initial: &MarketState,
    config: &SimConfig,
) -> Result<Vec<PathOutcome>, SimError> {
    let grid = Grid::new(params, jumps, config)?;
    let engine = Engine { params, jumps, policy, initial, grid, seed: config.seed };
    in_pool(config.workers, || {
        (0..config.n_paths).into_par_iter().map(|id| run_path(&engine, id as u64, None).0).collect()
    })
}
