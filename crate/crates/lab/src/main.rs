use std::process::ExitCode;

use clap::Parser;

use pauli_lab::commands::{run, Command};
use pauli_lab::config::{resolve, Overrides};

/// Pauli master equations of a harmonic oscillator: spectra, relaxation,
/// and cross-checks.
#[derive(Debug, Parser)]
#[command(name = "pauli", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Overrides,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = resolve(&cli.flags).and_then(|config| run(cli.command, &config, cli.flags.out.as_deref()));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pauli {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
