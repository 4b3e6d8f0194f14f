mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entdist_core::HomodyneModel;

use commands::{Fault, Overrides};
use config::{RunConfig, TableFormat};
use error::CliError;

/// Entanglement distribution over collective-noise channels.
#[derive(Debug, Parser)]
#[command(name = "entdist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-party frequency-to-polarization pipeline.
    RunTwoQubit(RunArgs),
    /// n-party GHZ pipeline.
    RunGhz {
        #[command(flatten)]
        run: RunArgs,
        /// Number of parties.
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..=64))]
        n: Option<u64>,
        /// Allow odd n (extrapolated frequency pattern).
        #[arg(long)]
        experimental_odd_n: bool,
    },
    /// Two-party Monte Carlo over a parameter grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Table format (default: from the output extension, else csv).
        #[arg(long)]
        format: Option<TableFormat>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Run a single criterion (1-8).
        #[arg(long)]
        criterion: Option<u8>,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    trials: Option<u32>,
    /// Homodyne misreport probability, 0 to 0.5.
    #[arg(long, value_parser = parse_p_err)]
    p_err: Option<HomodyneModel>,
    /// Records (.jsonl) or sweep table path.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_p_err(s: &str) -> Result<HomodyneModel, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    HomodyneModel::new(v).map_err(|e| e.to_string())
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, Overrides), CliError> {
        let cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let ov = Overrides {
            seed: self.seed,
            trials: self.trials,
            p_err: self.p_err,
            output: self.output.clone(),
        };
        Ok((cfg, ov))
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::RunTwoQubit(run) => {
            let (cfg, ov) = run.load()?;
            commands::run_two_qubit(&cfg, &ov, out)
        }
        Command::RunGhz {
            run,
            n,
            experimental_odd_n,
        } => {
            let (cfg, ov) = run.load()?;
            commands::run_ghz(&cfg, &ov, n.map(|n| n as usize), experimental_odd_n, out)
        }
        Command::Sweep { run, format } => {
            let (cfg, ov) = run.load()?;
            commands::run_sweep(&cfg, &ov, format, out)
        }
        Command::Verify {
            criterion,
            inject_fault,
        } => commands::verify(criterion, inject_fault, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = dispatch(cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("entdist: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
