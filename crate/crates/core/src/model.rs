//! Parameter records, the terminal cost and the production rules.
//!
//! Units are seconds, MW and euros throughout. Hour- and day-denominated
//! inputs are converted when a [`ParamFile`] is turned into model records.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} violates {requirement}")]
    InvalidParameter { name: &'static str, value: f64, requirement: &'static str },
    #[error("a pure trader cannot produce (xi = {0})")]
    PureTraderProduction(f64),
    #[error("state time {t} outside [0, {horizon}]")]
    StateOutsideHorizon { t: f64, horizon: f64 },
    #[error("parameter file: {0}")]
    ParamFile(String),
}

/// Quadratic production cost `c(xi) = beta/2 xi^2`, or no production at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductionCost {
    Quadratic(f64),
    /// The limit `beta -> infinity`: the agent only trades.
    PureTrader,
}

impl ProductionCost {
    pub fn beta(self) -> Option<f64> {
        match self {
            ProductionCost::Quadratic(b) => Some(b),
            ProductionCost::PureTrader => None,
        }
    }
}

/// Whether the production decision is restricted to `xi >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProductionConstraint {
    NonNegative,
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Price volatility, EUR/MW/sqrt(s).
    pub sigma0: f64,
    /// Demand forecast volatility, MW/sqrt(s).
    pub sigma_d: f64,
    pub beta: ProductionCost,
    /// Imbalance penalty, EUR/MW^2.
    pub eta: f64,
    /// Demand drift, MW/s.
    pub mu: f64,
    /// Permanent impact, EUR/MW^2.
    pub nu: f64,
    /// Temporary impact, EUR s/MW^2.
    pub gamma: f64,
    pub rho: f64,
    /// Delivery time T in seconds.
    pub horizon: f64,
}

fn require(ok: bool, name: &'static str, value: f64, requirement: &'static str) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value, requirement })
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        require(self.gamma > 0.0, "gamma", self.gamma, "gamma > 0")?;
        require(self.eta > 0.0, "eta", self.eta, "eta > 0")?;
        if let ProductionCost::Quadratic(b) = self.beta {
            require(b > 0.0, "beta", b, "beta > 0")?;
        }
        require(self.sigma0 > 0.0, "sigma0", self.sigma0, "sigma0 > 0")?;
        require(self.sigma_d > 0.0, "sigma_d", self.sigma_d, "sigma_d > 0")?;
        require(self.nu >= 0.0, "nu", self.nu, "nu >= 0")?;
        require((-1.0..=1.0).contains(&self.rho), "rho", self.rho, "-1 <= rho <= 1")?;
        require(self.horizon > 0.0, "horizon", self.horizon, "horizon > 0")?;
        require(true, "mu", self.mu, "a finite value")?;
        Ok(())
    }

    pub fn is_pure_trader(&self) -> bool {
        matches!(self.beta, ProductionCost::PureTrader)
    }

    /// `r = eta beta / (eta + beta)`, or `eta` for a pure trader.
    pub fn reduced_cost_coefficient(&self) -> f64 {
        match self.beta {
            ProductionCost::Quadratic(b) => self.eta * b / (self.eta + b),
            ProductionCost::PureTrader => self.eta,
        }
    }

    /// `eta / (eta + beta)`: fraction of the spread covered by production.
    pub fn production_share(&self) -> f64 {
        match self.beta {
            ProductionCost::Quadratic(b) => self.eta / (self.eta + b),
            ProductionCost::PureTrader => 0.0,
        }
    }

    /// Copy of these parameters with production switched off.
    pub fn as_pure_trader(&self) -> ModelParams {
        ModelParams { beta: ProductionCost::PureTrader, ..*self }
    }
}

/// Free-function form of [`ModelParams::reduced_cost_coefficient`].
pub fn reduced_cost_coefficient(params: &ModelParams) -> f64 {
    params.reduced_cost_coefficient()
}

/// Compound Poisson jumps hitting demand forecast and price together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpParams {
    /// Intensity per second.
    pub lambda: f64,
    pub p_plus: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub pi_plus: f64,
    pub pi_minus: f64,
}

impl JumpParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        require(self.lambda >= 0.0, "lambda", self.lambda, "lambda >= 0")?;
        require((0.0..=1.0).contains(&self.p_plus), "p_plus", self.p_plus, "0 <= p_plus <= 1")?;
        require(self.delta_plus > 0.0, "delta_plus", self.delta_plus, "delta_plus > 0")?;
        require(self.delta_minus < 0.0, "delta_minus", self.delta_minus, "delta_minus < 0")?;
        require(self.pi_plus > 0.0, "pi_plus", self.pi_plus, "pi_plus > 0")?;
        require(self.pi_minus < 0.0, "pi_minus", self.pi_minus, "pi_minus < 0")?;
        Ok(())
    }

    pub fn p_minus(&self) -> f64 {
        1.0 - self.p_plus
    }

    /// Mean demand jump `p+ delta+ + p- delta-`.
    pub fn mean_demand_jump(&self) -> f64 {
        self.p_plus * self.delta_plus + self.p_minus() * self.delta_minus
    }

    /// Mean price jump `p+ pi+ + p- pi-`.
    pub fn mean_price_jump(&self) -> f64 {
        self.p_plus * self.pi_plus + self.p_minus() * self.pi_minus
    }

    /// Same jump sizes with intensity zero.
    pub fn switched_off(&self) -> JumpParams {
        JumpParams { lambda: 0.0, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub t: f64,
    /// Inventory bought on the intraday market, MW.
    pub x: f64,
    /// Quoted price, EUR/MW.
    pub y: f64,
    /// Residual demand forecast, MW.
    pub d: f64,
}

impl MarketState {
    pub fn new(t: f64, x: f64, y: f64, d: f64) -> Self {
        MarketState { t, x, y, d }
    }

    pub fn spread(&self) -> f64 {
        self.d - self.x
    }

    pub fn time_to_go(&self, params: &ModelParams) -> f64 {
        params.horizon - self.t
    }

    pub fn validate(&self, params: &ModelParams) -> Result<(), ModelError> {
        if (0.0..=params.horizon).contains(&self.t) {
            Ok(())
        } else {
            Err(ModelError::StateOutsideHorizon { t: self.t, horizon: params.horizon })
        }
    }
}

/// `C(spread, xi) = beta/2 xi^2 + eta/2 (spread - xi)^2`.
pub fn terminal_cost(spread: f64, xi: f64, params: &ModelParams) -> Result<f64, ModelError> {
    let imbalance = spread - xi;
    match params.beta {
        ProductionCost::Quadratic(b) => Ok(0.5 * b * xi * xi + 0.5 * params.eta * imbalance * imbalance),
        ProductionCost::PureTrader if xi == 0.0 => Ok(0.5 * params.eta * spread * spread),
        ProductionCost::PureTrader => Err(ModelError::PureTraderProduction(xi)),
    }
}

pub fn optimal_production_unconstrained(spread: f64, params: &ModelParams) -> f64 {
    params.production_share() * spread
}

pub fn optimal_production_constrained(spread: f64, params: &ModelParams) -> f64 {
    if spread >= 0.0 {
        optimal_production_unconstrained(spread, params)
    } else {
        0.0
    }
}

pub fn optimal_production(spread: f64, params: &ModelParams, constraint: ProductionConstraint) -> f64 {
    match constraint {
        ProductionConstraint::NonNegative => optimal_production_constrained(spread, params),
        ProductionConstraint::Relaxed => optimal_production_unconstrained(spread, params),
    }
}

/// Terminal cost once the optimal production for `spread` has been chosen.
pub fn cost_after_production(spread: f64, params: &ModelParams, constraint: ProductionConstraint) -> f64 {
    let r = params.reduced_cost_coefficient();
    match constraint {
        ProductionConstraint::NonNegative if spread < 0.0 => 0.5 * params.eta * spread * spread,
        _ => 0.5 * r * spread * spread,
    }
}

/// `beta` in a parameter file: a number or the word `"infinite"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaValue {
    Finite(f64),
    Word(BetaWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaWord {
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpFile {
    pub lambda_per_day: f64,
    pub p_plus: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub pi_plus: f64,
    pub pi_minus: f64,
}

/// On-disk parameter record (flat JSON object).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub sigma0: f64,
    pub sigma_d: f64,
    pub beta: BetaValue,
    pub eta: f64,
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    pub rho: f64,
    pub horizon_hours: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<JumpFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_hours: Option<f64>,
}

/// Validated contents of a parameter file in internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub jumps: Option<JumpParams>,
    /// Delay in seconds.
    pub delay: Option<f64>,
}

impl ParamFile {
    pub fn from_json(text: &str) -> Result<ParamFile, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::ParamFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter file serializes")
    }

    pub fn into_scenario(self) -> Result<Scenario, ModelError> {
        let beta = match self.beta {
            BetaValue::Finite(b) => ProductionCost::Quadratic(b),
            BetaValue::Word(BetaWord::Infinite) => ProductionCost::PureTrader,
        };
        let params = ModelParams {
            sigma0: self.sigma0,
            sigma_d: self.sigma_d,
            beta,
            eta: self.eta,
            mu: self.mu,
            nu: self.nu,
            gamma: self.gamma,
            rho: self.rho,
            horizon: self.horizon_hours * SECONDS_PER_HOUR,
        };
        params.validate()?;
        let jumps = match self.jump {
            Some(j) => {
                let jp = JumpParams {
                    lambda: j.lambda_per_day / SECONDS_PER_DAY,
                    p_plus: j.p_plus,
                    delta_plus: j.delta_plus,
                    delta_minus: j.delta_minus,
                    pi_plus: j.pi_plus,
                    pi_minus: j.pi_minus,
                };
                jp.validate()?;
                Some(jp)
            }
            None => None,
        };
        let delay = match self.delay_hours {
            Some(h) => {
                let h = h * SECONDS_PER_HOUR;
                require(
                    (0.0..=params.horizon).contains(&h),
                    "delay_hours",
                    h / SECONDS_PER_HOUR,
                    "0 <= delay_hours <= horizon_hours",
                )?;
                Some(h)
            }
            None => None,
        };
        Ok(Scenario { params, jumps, delay })
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ModelError> {
        ParamFile::from_json(text)?.into_scenario()
    }
}
