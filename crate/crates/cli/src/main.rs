use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use instantform_cli::{execute, parse_config, Command};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    ValidateFoliation,
    Radar,
    Centers,
    Tube,
    Evolve,
    Reconstruct,
    Spectrum,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::ValidateFoliation => Command::ValidateFoliation,
            Sub::Radar => Command::Radar,
            Sub::Centers => Command::Centers,
            Sub::Tube => Command::Tube,
            Sub::Evolve => Command::Evolve,
            Sub::Reconstruct => Command::Reconstruct,
            Sub::Spectrum => Command::Spectrum,
        }
    }
}

/// Instant-form relativistic kinematics: foliations, radar time, collective
/// variables, rest-frame dynamics and relative-motion spectra.
#[derive(Debug, Parser)]
#[command(name = "instantform", version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Root directory for run outputs.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_config(&text, cli.command.into(), cli.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cfg, &cli.out) {
        Ok(summary) => {
            println!("{}", summary.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
