use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use frets_cli::commands::{self, SplitChoice, WhichLearner};
use frets_core::Error;

#[derive(Parser)]
#[command(
    name = "frets",
    version,
    about = "Frequency-domain MLP forecaster for multivariate time series"
)]
struct Cli {
    /// Override the seed from the config or generator spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a run config and write a checkpoint + epoch log.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a split of the configured dataset with a trained checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        split: SplitChoice,
        /// Evaluate against a different dataset file.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forecast from a CSV holding exactly the last `lookback` rows.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Input window CSV (same column layout as the training data).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in property verification suites.
    Check,
    /// Export learner weights as CSV plus a diagonal-band energy summary.
    InspectWeights {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        which: WhichLearner,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic sinusoid dataset CSV from a generator spec.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> frets_core::Result<()> {
    match cli.command {
        Command::Train { config, out } => {
            commands::cmd_train(&config, cli.seed, out.as_deref())?;
        }
        Command::Evaluate {
            checkpoint,
            split,
            data,
            out,
        } => {
            commands::cmd_evaluate(&checkpoint, split, data.as_deref(), out.as_deref())?;
        }
        Command::Predict {
            checkpoint,
            input,
            out,
        } => {
            commands::cmd_predict(&checkpoint, &input, out.as_deref())?;
        }
        Command::Check => {
            commands::cmd_check(cli.seed.unwrap_or(2024))?;
        }
        Command::InspectWeights {
            checkpoint,
            which,
            out,
        } => {
            commands::cmd_inspect_weights(&checkpoint, which, out.as_deref())?;
        }
        Command::Synth { config, out } => {
            commands::cmd_synth(&config, cli.seed, out.as_deref())?;
        }
    }
    Ok(())
}

/// Exit codes by error class: 0 ok, 2 config, 3 io, 4 dimension/shape,
/// 5 property violation, 6 ingestion, 7 training, 8 checkpoint.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io(_) => 3,
        Error::Dimension(_) => 4,
        Error::Property(_) => 5,
        Error::Ingestion(_) => 6,
        Error::Training(_) => 7,
        Error::Checkpoint(_) => 8,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
