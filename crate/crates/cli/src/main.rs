//! `csifb`: generate datasets, train analog and digital feedback models,
//! evaluate rate-versus-overhead sweeps, and run the physics self-test.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "csifb", version, about = "Analog vs digital deep CSI feedback experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Run configuration (TOML). Defaults to the built-in desk-scale profile.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output root; the configured paths are resolved against it.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overwrite existing outputs instead of skipping them.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Analog,
    Digital,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the train and test splits.
    Gen,
    /// Train checkpoints for one scheme.
    Train {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Uplink SNR the analog model is trained for.
        #[arg(long = "snr-db")]
        snr_db: Option<f64>,
        /// Feedback overhead; defaults to every ρ in the configured grid (analog only).
        #[arg(long)]
        rho: Option<f64>,
        /// Rate-distortion weight (digital only).
        #[arg(long)]
        lambda: Option<f64>,
        /// Overrides the configured epoch count.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate checkpoints over the configured grid and write CSV and plots.
    Eval {
        /// Checkpoint directories; defaults to every checkpoint under the configured path.
        checkpoints: Vec<PathBuf>,
        /// Replace the per-λ digital rows with their envelope.
        #[arg(long)]
        envelope: bool,
    },
    /// Run the physics property suite and gradient checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen => commands::gen(&cli.global),
        Command::Train { scheme, snr_db, rho, lambda, epochs } => {
            commands::train(&cli.global, scheme, snr_db, rho, lambda, epochs)
        }
        Command::Eval { checkpoints, envelope } => commands::eval(&cli.global, &checkpoints, envelope),
        Command::Selftest => commands::selftest(&cli.global),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
