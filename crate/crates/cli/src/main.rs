use clap::{Args, Parser, Subcommand};
use perimeter_cli::config::parse_angles;
use perimeter_cli::{cmd_montecarlo, cmd_simulate, cmd_solve, cmd_validate, load_config, CliError, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Sequential perimeter defense against curvature-constrained intruders.
///
/// Exit codes: 0 ok, 1 config error, 2 assumption warning, 3 infeasible game.
#[derive(Parser)]
#[command(name = "perimeter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the standing assumptions for a configuration.
    Validate(Common),
    /// Solve the engagement geometry and write solve.json.
    Solve(Common),
    /// Play one sequence of intruders and write the run record and trajectories.
    Simulate(Common),
    /// Run repeated sequences and write the capture-percentage curves.
    Montecarlo(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    arrivals: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated arrival angles in radians, played in order.
    #[arg(long, allow_hyphen_values = true)]
    angles: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Result<Overrides, CliError> {
        Ok(Overrides {
            seed: self.seed,
            arrivals: self.arrivals,
            trials: self.trials,
            angles: self.angles.as_deref().map(parse_angles).transpose()?,
            out_dir: self.out.clone(),
        })
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let common = match &cli.command {
        Command::Validate(c) | Command::Solve(c) | Command::Simulate(c) | Command::Montecarlo(c) => c,
    };
    let config = load_config(&common.config, &common.overrides()?)?;
    match cli.command {
        Command::Validate(_) => cmd_validate(&config).map(|(_, code)| code),
        Command::Solve(_) => cmd_solve(&config).map(|_| 0),
        Command::Simulate(_) => cmd_simulate(&config).map(|_| 0),
        Command::Montecarlo(_) => cmd_montecarlo(&config).map(|_| 0),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
