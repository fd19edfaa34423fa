use std::path::{Path, PathBuf};

use intraday::model::{MarketState, Scenario};
use intraday::oracle::DEFAULT_VERIFY_SEED;
use intraday::presets::{load_preset, preset_text, standard_initial_state};

use crate::CliError;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = DEFAULT_VERIFY_SEED;

/// Parameters, seed and output directory of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Preset name or file path the parameters came from.
    pub source: String,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    /// Loads `config` (preset name or file path), falling back to
    /// `default_preset`.
    pub fn load(config: Option<&str>, default_preset: &str, seed: Option<u64>, out: &Path) -> Result<Self, CliError> {
        let (scenario, source) = resolve_config(config, default_preset)?;
        Ok(RunConfig { scenario, source, seed: seed.unwrap_or(DEFAULT_SEED), out: out.to_path_buf() })
    }
}

/// A bundled preset name wins over a file of the same name.
pub fn resolve_config(config: Option<&str>, default_preset: &str) -> Result<(Scenario, String), CliError> {
    let name = config.unwrap_or(default_preset);
    if preset_text(name).is_some() {
        return Ok((load_preset(name)?, name.to_string()));
    }
    let path = Path::new(name);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let scenario = Scenario::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((scenario, name.to_string()))
}

/// Starting inventory, price and demand forecast at time 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub x0: f64,
    pub y0: f64,
    pub d0: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        let s = standard_initial_state();
        InitialState { x0: s.x, y0: s.y, d0: s.d }
    }
}

impl InitialState {
    pub fn state(&self, scenario: &Scenario) -> Result<MarketState, CliError> {
        for (name, v) in [("x0", self.x0), ("y0", self.y0), ("d0", self.d0)] {
            if !v.is_finite() {
                return Err(CliError::Validation(format!("initial {name} must be finite, got {v}")));
            }
        }
        let s = MarketState::new(0.0, self.x0, self.y0, self.d0);
        s.validate(&scenario.params)?;
        Ok(s)
    }
}
