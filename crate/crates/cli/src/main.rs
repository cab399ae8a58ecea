use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pendctl::commands::{cmd_analyze, cmd_lti_demo, cmd_simulate, cmd_synthesize};
use pendctl::config::PlantChoice;
use pendctl::{CliError, RunConfig};

/// Integral state-feedback synthesis and simulation for the rotary inverted
/// pendulum.
///
/// Exit codes: 0 success, 2 validation, 3 numerical failure, 4 I/O.
#[derive(Parser, Debug)]
#[command(name = "pendctl", version)]
struct Cli {
    /// TOML run configuration; defaults reproduce the laboratory scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file for traces.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Set a configuration key, e.g. `run.duration=20` (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Plant model, overriding `plant.mode`.
    #[arg(long, value_enum, global = true)]
    plant: Option<PlantChoice>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Place poles and print gains, eigenvalues and controllability ranks.
    Synthesize,
    /// Run the scenario, write the trace CSV and print a summary.
    Simulate,
    /// Print the boundedness report, optionally checking a trace.
    Analyze {
        /// Trace CSV to check against the bound and for convergence.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Chain-plant controller synthesis with a disturbance-rejection run.
    LtiDemo,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = cli.overrides.clone();
    if let Some(mode) = cli.plant {
        let name = match mode {
            PlantChoice::Full => "full",
            PlantChoice::Reduced => "reduced",
        };
        overrides.push(format!("plant.mode=\"{name}\""));
    }
    RunConfig::parse(&text, &overrides)
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(cli)?;
    let out_or = |default: &str| cli.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match &cli.command {
        Command::Synthesize => cmd_synthesize(&cfg, out),
        Command::Simulate => cmd_simulate(&cfg, &out_or("trace.csv"), out),
        Command::Analyze { trace } => cmd_analyze(&cfg, trace.as_deref(), out),
        Command::LtiDemo => cmd_lti_demo(&cfg, &out_or("lti_trace.csv"), out),
        Command::ShowConfig => {
            write!(out, "{}", cfg.to_toml())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("pendctl: {e}");
            ExitCode::from(e.code())
        }
    }
}
