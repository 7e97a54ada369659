use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pns_qkd::cli::{self, CliError, CommandOutput, RunConfig};

#[derive(Parser)]
#[command(name = "qkd-bench", version, about = "Weak-pulse QKD under photon-number-splitting attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file (flat key/value object).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (CSV for `sweep`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override one configuration key, e.g. `--set mu_sarg=0.25`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Photon statistics, transmittance and raw detection rate.
    Rates,
    /// Critical attenuations, delta_1 and the 67 km scenario.
    Critical,
    /// Eve's optimal information versus attenuation, as CSV.
    Sweep,
    /// Monte Carlo key distribution without an eavesdropper.
    Session,
    /// Build and check the three-photon USD measurement.
    PovmVerify,
}

fn run(cli: Cli) -> Result<CommandOutput, CliError> {
    let c = cli.common;
    let cfg = RunConfig::load(c.config.as_deref(), &c.overrides, c.seed, c.out)?;
    match cli.command {
        Command::Rates => Ok(cli::cmd_rates(&cfg)),
        Command::Critical => cli::cmd_critical(&cfg),
        Command::Sweep => cli::cmd_sweep(&cfg),
        Command::Session => Ok(cli::cmd_session(&cfg)),
        Command::PovmVerify => cli::cmd_povm_verify(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{}", out.text);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("qkd-bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
