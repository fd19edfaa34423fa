//! Shortfall probability, approximate value and error bound as one input
//! of the starting point varies.

use std::path::Path;

use intraday::closed_form::value_aux;
use intraday::error_bounds::error_bound;
use intraday::model::{MarketState, ModelParams, SECONDS_PER_HOUR};

use crate::CliError;

/// Probabilities and bounds below this are printed as [`BELOW_THRESHOLD`].
pub const TABLE_THRESHOLD: f64 = 1e-16;
pub const BELOW_THRESHOLD: &str = "<1e-16";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    /// The varied input in the unit of the table's first column.
    pub input: f64,
    pub shortfall_probability: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem, e.g. `table1`.
    pub name: &'static str,
    /// Header of the varied column.
    pub input_column: &'static str,
    pub rows: Vec<TableRow>,
}

/// Three significant figures in exponent form, e.g. `1.89e6`.
pub fn render_sig3(x: f64) -> String {
    format!("{x:.2e}")
}

fn render_small(x: f64) -> String {
    if x.abs() < TABLE_THRESHOLD {
        BELOW_THRESHOLD.to_string()
    } else {
        render_sig3(x)
    }
}

fn row(input: f64, params: &ModelParams, state: MarketState) -> Result<TableRow, CliError> {
    let tau = params.horizon - state.t;
    let b = error_bound(tau, state.spread(), state.y, params)?;
    Ok(TableRow {
        input,
        shortfall_probability: b.shortfall_probability,
        value: value_aux(&state, params),
        bound: b.bound,
    })
}

/// The three tables from a base parameter set: horizon varied (with
/// `D_0 = 50000`, `Y_0 = 50`), then `D_0`, then `Y_0` at the base horizon.
pub fn compute_tables(base: &ModelParams) -> Result<Vec<Table>, CliError> {
    base.validate()?;
    let start = |y: f64, d: f64| MarketState::new(0.0, 0.0, y, d);
    let horizons = [1.0, 8.0, 24.0, 50.0];
    let t1 = horizons
        .iter()
        .map(|&h| row(h, &ModelParams { horizon: h * SECONDS_PER_HOUR, ..*base }, start(50.0, 50_000.0)))
        .collect::<Result<_, _>>()?;
    let t2 = [500.0, 5_000.0, 50_000.0, 500_000.0]
        .iter()
        .map(|&d| row(d, base, start(50.0, d)))
        .collect::<Result<_, _>>()?;
    let t3 =
        [500.0, 50.0, 40.0, 30.0, 20.0].iter().map(|&y| row(y, base, start(y, 50_000.0))).collect::<Result<_, _>>()?;
    Ok(vec![
        Table { name: "table1", input_column: "T_h", rows: t1 },
        Table { name: "table2", input_column: "D0_MW", rows: t2 },
        Table { name: "table3", input_column: "Y0_EUR_per_MW", rows: t3 },
    ])
}

/// Writes `table` as CSV with values rounded to three significant figures.
pub fn write_table(table: &Table, path: &Path) -> Result<(), CliError> {
    let to_io = |e: csv::Error| CliError::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    w.write_record([table.input_column, "shortfall_probability", "value_eur", "error_bound_eur"]).map_err(to_io)?;
    for r in &table.rows {
        w.write_record([
            format!("{}", r.input),
            render_small(r.shortfall_probability),
            render_sig3(r.value),
            render_small(r.bound),
        ])
        .map_err(to_io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
