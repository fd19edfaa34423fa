use std::fmt;
use std::sync::Arc;

use crate::closed_form::{feedback_rate, feedback_rate_jump, feedback_rate_pure_trader};
use crate::model::{optimal_production_unconstrained, JumpParams, MarketState, ModelParams, ProductionConstraint};

/// Trading rate as a function of the state and the production already
/// committed (`None` before the production decision).
pub type RateRule = Arc<dyn Fn(&MarketState, Option<f64>) -> f64 + Send + Sync>;
/// Production quantity chosen from the state at the decision time.
pub type ProductionRule = Arc<dyn Fn(&MarketState) -> f64 + Send + Sync>;

/// A trading rule together with a one-off production decision.
#[derive(Clone)]
pub struct Policy {
    rate_rule: RateRule,
    production_time: f64,
    production_rule: ProductionRule,
    constraint: ProductionConstraint,
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Policy")
            .field("production_time", &self.production_time)
            .field("constraint", &self.constraint)
            .finish_non_exhaustive()
    }
}

impl Policy {
    /// `production_rule` returns the unconstrained quantity; the constraint
    /// truncates it when the decision is taken.
    pub fn new(
        rate_rule: RateRule,
        production_time: f64,
        production_rule: ProductionRule,
        constraint: ProductionConstraint,
    ) -> Self {
        Policy { rate_rule, production_time, production_rule, constraint }
    }

    /// Closed-form optimal rate with production decided at delivery.
    pub fn optimal(params: &ModelParams, constraint: ProductionConstraint) -> Self {
        let p = *params;
        let rate: RateRule = Arc::new(move |s: &MarketState, _| feedback_rate(p.horizon - s.t, s.spread(), s.y, &p));
        let production: ProductionRule =
            Arc::new(move |s: &MarketState| optimal_production_unconstrained(s.spread(), &p));
        Policy::new(rate, p.horizon, production, constraint)
    }

    /// Optimal rate of the jump model with production decided at delivery.
    pub fn optimal_jump(params: &ModelParams, jumps: &JumpParams, constraint: ProductionConstraint) -> Self {
        let (p, j) = (*params, *jumps);
        let rate: RateRule =
            Arc::new(move |s: &MarketState, _| feedback_rate_jump(p.horizon - s.t, s.spread(), s.y, &p, &j));
        let production: ProductionRule =
            Arc::new(move |s: &MarketState| optimal_production_unconstrained(s.spread(), &p));
        Policy::new(rate, p.horizon, production, constraint)
    }

    /// Optimal rate of an agent that never produces.
    pub fn pure_trader(params: &ModelParams) -> Self {
        let p = *params;
        let rate: RateRule =
            Arc::new(move |s: &MarketState, _| feedback_rate_pure_trader(p.horizon - s.t, s.spread(), s.y, &p));
        Policy::new(rate, p.horizon, Arc::new(|_| 0.0), ProductionConstraint::Relaxed)
    }

    /// Never trades and never produces.
    pub fn idle(params: &ModelParams) -> Self {
        Policy::new(Arc::new(|_, _| 0.0), params.horizon, Arc::new(|_| 0.0), ProductionConstraint::Relaxed)
    }

    /// Adds a deterministic function of time to the trading rate.
    pub fn with_rate_offset(self, offset: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let inner = self.rate_rule.clone();
        let rate: RateRule = Arc::new(move |s: &MarketState, xi| inner(s, xi) + offset(s.t));
        Policy { rate_rule: rate, ..self }
    }

    pub fn rate(&self, state: &MarketState, committed: Option<f64>) -> f64 {
        (self.rate_rule)(state, committed)
    }

    pub fn production_time(&self) -> f64 {
        self.production_time
    }

    pub fn constraint(&self) -> ProductionConstraint {
        self.constraint
    }

    /// Production chosen at the decision time, after the sign constraint.
    pub fn decide_production(&self, state: &MarketState) -> f64 {
        let raw = (self.production_rule)(state);
        match self.constraint {
            ProductionConstraint::NonNegative => raw.max(0.0),
            ProductionConstraint::Relaxed => raw,
        }
    }
}
