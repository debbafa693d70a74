//! `memswitch`: synthesize, simulate, sweep and compare memristor
//! programming protocols from a JSON run configuration.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use memswitch_core::prelude::RateMode;

use commands::Axis;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "memswitch",
    version,
    about = "Energy-optimal memristor programming protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Full,
    SetOnly,
    ResetOnly,
    OneSided,
}

impl From<ModeArg> for RateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => RateMode::Full,
            ModeArg::SetOnly => RateMode::SetOnly,
            ModeArg::ResetOnly => RateMode::ResetOnly,
            ModeArg::OneSided => RateMode::OneSided,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the optimal protocol; writes protocol CSV, profile CSV and report JSON.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Simulate a protocol CSV under the configured device; writes trace CSV and summary JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        /// Override the dynamic-balance rate used for simulation.
        #[arg(long, value_enum)]
        rate_mode: Option<ModeArg>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Tabulate constant-pulse and optimal control over programming time or pulse amplitude.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        points: usize,
        /// Logarithmic spacing.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Simulate the optimal and the constant-pulse protocol and report their energy ratio.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Synthesize { config, out_dir } => {
            commands::synthesize_cmd(&RunConfig::load(&config)?, out_dir.as_deref())
        }
        Command::Simulate {
            config,
            protocol,
            rate_mode,
            out_dir,
        } => commands::simulate_cmd(
            &RunConfig::load(&config)?,
            &protocol,
            rate_mode.map(Into::into),
            out_dir.as_deref(),
        ),
        Command::Sweep {
            config,
            axis,
            from,
            to,
            points,
            log,
            out_dir,
        } => {
            let run = RunConfig::load(&config)?;
            let values = commands::sweep_values(from, to, points, log)?;
            commands::sweep_cmd(&run, axis, &values, out_dir.as_deref())
        }
        Command::Compare { config, out_dir } => {
            commands::compare_cmd(&RunConfig::load(&config)?, out_dir.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
