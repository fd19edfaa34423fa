use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use intraday::error_bounds::DEFAULT_JUMP_SAMPLES;
use intraday::oracle::ProbeOptions;
use intraday::simulate::DEFAULT_STEP;

use crate::commands::{
    cmd_delay, cmd_errorbound, cmd_simulate, cmd_tables, cmd_verify, DelayOptions, ErrorBoundOptions, SimScenario,
    SimulateOptions, VerifyCliOptions,
};
use crate::config::{InitialState, RunConfig};
use crate::{CliError, Exit, Output};

#[derive(Debug, Parser)]
#[command(name = "intraday", version, about = "Optimal intraday trading: tables, simulations and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Preset name (table13, sim-nojump, sim-jump-pos, sim-jump-neg,
    /// sim-delay) or path to a JSON parameter file.
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// Initial inventory, MW.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x0: f64,
    /// Initial price, EUR/MW.
    #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
    pub y0: f64,
    /// Initial residual demand forecast, MW.
    #[arg(long, default_value_t = 50_000.0, allow_negative_numbers = true)]
    pub d0: f64,
}

impl StateArgs {
    fn initial(&self) -> InitialState {
        InitialState { x0: self.x0, y0: self.y0, d0: self.d0 }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shortfall probability, value and error bound tables (table1..3.csv).
    Tables {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate paths of a scenario and export them as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// nojump, jump-positive, jump-negative or delay.
        #[arg(long, default_value = "nojump")]
        scenario: String,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        /// Time step, seconds.
        #[arg(long, default_value_t = DEFAULT_STEP)]
        dt: f64,
        #[arg(long)]
        workers: Option<usize>,
        /// Record every n-th grid node.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Clamp production at zero.
        #[arg(long)]
        constrained: bool,
        #[arg(long)]
        delay_hours: Option<f64>,
        #[command(flatten)]
        state: StateArgs,
    },
    /// Run the verification suite; exits 2 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        ode_nodes: usize,
        #[arg(long, default_value_t = 1_000)]
        fuzz: usize,
        /// Also run the perturbation probe.
        #[arg(long)]
        probe: bool,
        /// Bump size of the probe, MW/s.
        #[arg(long, default_value_t = 0.5)]
        probe_epsilon: f64,
        #[arg(long, default_value_t = 2_000)]
        probe_paths: usize,
        #[command(flatten)]
        state: StateArgs,
    },
    /// Bounds on the cost of relaxing the production sign constraint.
    Errorbound {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delay_hours: Option<f64>,
        /// Monte Carlo samples for the jump bound.
        #[arg(long, default_value_t = DEFAULT_JUMP_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        state: StateArgs,
    },
    /// Value and premium of deciding production early.
    Delay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delay_hours: Option<f64>,
        /// Intervals of the delay grid in delay.csv.
        #[arg(long, default_value_t = 10)]
        grid: usize,
        #[command(flatten)]
        state: StateArgs,
    },
}

fn load(common: &Common, default_preset: &str) -> Result<RunConfig, CliError> {
    RunConfig::load(common.config.as_deref(), default_preset, common.seed, &common.out)
}

pub fn run(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Tables { common } => cmd_tables(&load(common, "table13")?),
        Command::Simulate { common, scenario, paths, dt, workers, stride, constrained, delay_hours, state } => {
            let scenario: SimScenario = scenario.parse()?;
            let opts = SimulateOptions {
                scenario,
                paths: *paths,
                dt: *dt,
                workers: *workers,
                stride: *stride,
                constrained: *constrained,
                delay_hours: *delay_hours,
                initial: state.initial(),
            };
            cmd_simulate(&load(common, scenario.preset())?, &opts)
        }
        Command::Verify { common, paths, dt, ode_nodes, fuzz, probe, probe_epsilon, probe_paths, state } => {
            let opts = VerifyCliOptions {
                paths: *paths,
                dt: *dt,
                ode_nodes: *ode_nodes,
                fuzz_points: *fuzz,
                probe: probe.then_some(ProbeOptions { epsilon: *probe_epsilon, n_paths: *probe_paths }),
                initial: state.initial(),
            };
            cmd_verify(&load(common, "sim-nojump")?, &opts)
        }
        Command::Errorbound { common, delay_hours, samples, state } => {
            let opts = ErrorBoundOptions { initial: state.initial(), delay_hours: *delay_hours, samples: *samples };
            cmd_errorbound(&load(common, "sim-nojump")?, &opts)
        }
        Command::Delay { common, delay_hours, grid, state } => {
            let opts = DelayOptions { initial: state.initial(), delay_hours: *delay_hours, grid_points: *grid };
            cmd_delay(&load(common, "sim-delay")?, &opts)
        }
    }
}

/// Result of one command line: exit status and the text for each stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub exit: Exit,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first) and runs the command.
pub fn parse_and_run<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Invocation { exit: Exit::Validation, stdout: String::new(), stderr: text }
            } else {
                Invocation { exit: Exit::Success, stdout: text, stderr: String::new() }
            };
        }
    };
    match run(&cli.command) {
        Ok(out) => {
            let stderr =
                if out.exit == Exit::Verification { "verification failed\n".to_string() } else { String::new() };
            Invocation { exit: out.exit, stdout: out.text, stderr }
        }
        Err(e) => Invocation { exit: e.exit(), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}
