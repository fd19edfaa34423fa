use serde::Serialize;

use super::{PathOutcome, PathSet};
use crate::model::{terminal_cost, JumpParams, ModelError, ModelParams};

/// Half-width of reported confidence intervals, in standard errors.
pub const CI_WIDTH: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

impl CostEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var =
            if n > 1 { samples.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        CostEstimate { mean, stderr: (var / n as f64).sqrt(), n_paths: n }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }

    pub fn from_outcomes(outcomes: &[PathOutcome], params: &ModelParams) -> Result<Self, ModelError> {
        let costs = outcomes
            .iter()
            .map(|o| Ok(o.running_cost + terminal_cost(o.terminal.spread(), o.production, params)?))
            .collect::<Result<Vec<f64>, ModelError>>()?;
        Ok(CostEstimate::from_samples(&costs))
    }
}

/// Average realized cost (trading cost plus terminal cost) over the paths.
pub fn estimate_cost(paths: &PathSet, params: &ModelParams) -> Result<CostEstimate, ModelError> {
    let outcomes: Vec<PathOutcome> = paths.paths.iter().map(|p| p.outcome).collect();
    CostEstimate::from_outcomes(&outcomes, params)
}

/// Time trend of the mean trading rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleReport {
    /// Estimated `d E[q_s] / ds`, MW/s^2.
    pub slope: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Drift implied by the model: `-lambda pi / (2 gamma)`, zero without jumps.
    pub expected: f64,
    pub n_paths: usize,
    pub window: (f64, f64),
}

impl MartingaleReport {
    pub fn contains_expected(&self) -> bool {
        self.ci_low <= self.expected && self.expected <= self.ci_high
    }
}

fn ols_slope(t: &[f64], q: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let qm = q.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&ti, &qi) in t.iter().zip(q) {
        sxy += (ti - tm) * (qi - qm);
        sxx += (ti - tm) * (ti - tm);
    }
    sxy / sxx
}

/// Slope of the mean rate over `[t0, t1]`.
///
/// Each path gets its own least-squares slope; since the design is shared,
/// their average is the slope of the mean rate and their spread gives the
/// standard error.
pub fn martingale_diagnostics_window(
    paths: &PathSet,
    params: &ModelParams,
    jumps: Option<&JumpParams>,
    t0: f64,
    t1: f64,
) -> MartingaleReport {
    let rows: Vec<usize> = (0..paths.times.len()).filter(|&i| paths.times[i] >= t0 && paths.times[i] <= t1).collect();
    let t: Vec<f64> = rows.iter().map(|&i| paths.times[i]).collect();
    let slopes: Vec<f64> = paths
        .paths
        .iter()
        .map(|p| {
            let q: Vec<f64> = rows.iter().map(|&i| p.q[i]).collect();
            ols_slope(&t, &q)
        })
        .collect();
    let est = CostEstimate::from_samples(&slopes);
    let expected = jumps.map_or(0.0, |j| -j.lambda * j.mean_price_jump() / (2.0 * params.gamma));
    MartingaleReport {
        slope: est.mean,
        stderr: est.stderr,
        ci_low: est.mean - CI_WIDTH * est.stderr,
        ci_high: est.mean + CI_WIDTH * est.stderr,
        expected,
        n_paths: est.n_paths,
        window: (t0, t1),
    }
}

/// Slope of the mean rate over the whole horizon.
pub fn martingale_diagnostics(paths: &PathSet, params: &ModelParams, jumps: Option<&JumpParams>) -> MartingaleReport {
    martingale_diagnostics_window(paths, params, jumps, 0.0, paths.horizon)
}
