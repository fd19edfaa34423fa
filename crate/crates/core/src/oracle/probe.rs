//! Monte Carlo check that perturbing the optimal rate raises the cost.

use serde::Serialize;

use crate::model::{terminal_cost, JumpParams, MarketState, ModelParams};
use crate::simulate::{sample_outcomes, CostEstimate, PathOutcome, Policy, SimConfig, SimError};

/// Deterministic shape added to the trading rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BumpProfile {
    Constant,
    /// First third of the horizon.
    EarlyWindow,
    /// Last third of the horizon.
    LateWindow,
}

impl BumpProfile {
    pub const ALL: [BumpProfile; 3] = [BumpProfile::Constant, BumpProfile::EarlyWindow, BumpProfile::LateWindow];

    pub fn value(self, t: f64, horizon: f64) -> f64 {
        let on = match self {
            BumpProfile::Constant => true,
            BumpProfile::EarlyWindow => t < horizon / 3.0,
            BumpProfile::LateWindow => t >= 2.0 * horizon / 3.0,
        };
        if on {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileResult {
    pub profile: BumpProfile,
    /// Paired cost increase at `epsilon`.
    pub increase: CostEstimate,
    /// Paired cost increase at `2 epsilon`.
    pub increase_double: CostEstimate,
    /// `increase_double.mean / increase.mean`, close to 4 for a quadratic response.
    pub ratio: f64,
}

impl ProfileResult {
    /// Both increases positive by more than `k` standard errors.
    pub fn significant(&self, k: f64) -> bool {
        self.increase.mean > k * self.increase.stderr && self.increase_double.mean > k * self.increase_double.stderr
    }

    /// Ratio within `tol` (relative) of 4.
    pub fn quadratic(&self, tol: f64) -> bool {
        (self.ratio - 4.0).abs() <= tol * 4.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub epsilon: f64,
    pub n_paths: usize,
    pub base_cost: CostEstimate,
    pub profiles: Vec<ProfileResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSetup {
    pub initial: MarketState,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

fn costs(outcomes: &[PathOutcome], params: &ModelParams) -> Result<Vec<f64>, SimError> {
    outcomes.iter().map(|o| Ok(o.running_cost + terminal_cost(o.terminal.spread(), o.production, params)?)).collect()
}

/// Runs `base_policy` and its bumped versions on common random numbers and
/// reports the paired cost increases.
pub fn optimality_probe(
    params: &ModelParams,
    jumps: Option<&JumpParams>,
    base_policy: &Policy,
    perturbation_scale: f64,
    setup: &ProbeSetup,
) -> Result<ProbeReport, SimError> {
    let config = SimConfig::new(setup.n_paths, setup.dt, setup.seed);
    let run = |policy: &Policy| -> Result<Vec<f64>, SimError> {
        costs(&sample_outcomes(params, jumps, policy, &setup.initial, &config)?, params)
    };
    let base = run(base_policy)?;
    let horizon = params.horizon;
    let mut profiles = Vec::new();
    for profile in BumpProfile::ALL {
        let mut increases = Vec::with_capacity(2);
        for eps in [perturbation_scale, 2.0 * perturbation_scale] {
            let bumped = base_policy.clone().with_rate_offset(move |t| eps * profile.value(t, horizon));
            let diff: Vec<f64> = run(&bumped)?.iter().zip(&base).map(|(c, b)| c - b).collect();
            increases.push(CostEstimate::from_samples(&diff));
        }
        profiles.push(ProfileResult {
            profile,
            increase: increases[0],
            increase_double: increases[1],
            ratio: increases[1].mean / increases[0].mean,
        });
    }
    Ok(ProbeReport {
        epsilon: perturbation_scale,
        n_paths: setup.n_paths,
        base_cost: CostEstimate::from_samples(&base),
        profiles,
    })
}
