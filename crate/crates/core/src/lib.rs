//! Optimal intraday trading for a producer who must cover a random residual
//! demand at a fixed delivery time.
//!
//! The agent trades continuously on the intraday market with linear
//! permanent and temporary impact, then decides a production quantity at
//! (or before) delivery and pays a quadratic penalty on the remaining
//! imbalance. With the production sign constraint relaxed the problem is
//! linear-quadratic and everything is explicit:
//!
//! * [`closed_form`]: value functions and feedback trading rates, with and
//!   without demand/price jumps.
//! * [`error_bounds`]: how far the relaxed solution can be from the
//!   constrained one.
//! * [`delay`]: production fixed some time before delivery.
//! * [`simulate`]: Euler paths, realized costs and diagnostics.
//! * [`oracle`]: independent numerical checks of all of the above.
//!
//! ```
//! use intraday::{closed_form, presets};
//!
//! let scenario = presets::load_preset("sim-nojump").unwrap();
//! let state = presets::standard_initial_state();
//! let value = closed_form::value_aux(&state, &scenario.params);
//! assert!((value - 1_916_697.6).abs() < 1.0);
//! ```

pub mod closed_form;
pub mod delay;
pub mod error_bounds;
pub mod model;
pub mod oracle;
pub mod presets;
pub mod rng;
pub mod simulate;

pub use model::{JumpParams, MarketState, ModelParams, ProductionConstraint, ProductionCost, Scenario};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/closed-form.md")]
    mod closed_form {}
    #[doc = include_str!("../../../book/src/error-bounds.md")]
    mod error_bounds {}
    #[doc = include_str!("../../../book/src/jumps.md")]
    mod jumps {}
    #[doc = include_str!("../../../book/src/delay.md")]
    mod delay {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
