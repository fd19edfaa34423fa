//! Bundled parameter sets.
//!
//! Files live under `presets/v1/`; a new version directory is added whenever
//! a preset changes, so old names keep their meaning.

use crate::model::{MarketState, ModelError, Scenario};

pub const PRESET_VERSION: &str = "v1";

/// `(name, file contents)` of every bundled preset.
pub const PRESETS: [(&str, &str); 5] = [
    ("table13", include_str!("../presets/v1/table13.json")),
    ("sim-nojump", include_str!("../presets/v1/sim-nojump.json")),
    ("sim-jump-pos", include_str!("../presets/v1/sim-jump-pos.json")),
    ("sim-jump-neg", include_str!("../presets/v1/sim-jump-neg.json")),
    ("sim-delay", include_str!("../presets/v1/sim-delay.json")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load_preset(name: &str) -> Result<Scenario, ModelError> {
    let text = preset_text(name).ok_or_else(|| ModelError::ParamFile(format!("unknown preset `{name}`")))?;
    Scenario::from_json(text)
}

/// Starting point shared by the bundled scenarios: no inventory, price
/// 50 EUR/MW, demand forecast 50000 MW.
pub fn standard_initial_state() -> MarketState {
    MarketState::new(0.0, 0.0, 50.0, 50_000.0)
}
