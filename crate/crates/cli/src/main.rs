//! Command-line pipeline: synthesize or ingest a gaze corpus, train the
//! privatizing autoencoder, privatize, and evaluate privacy and utility per
//! privacy level.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaze_privacy::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "gaze-privacy", version, about = "Latent-noise privatization of eye-tracking data")]
struct Cli {
    /// TOML pipeline configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,

    /// Output root, overriding `paths.output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,

    /// Raw corpus directory, overriding `paths.data_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    data: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic multi-subject corpus into the data directory.
    Synth,
    /// Train the autoencoder on the training subjects.
    TrainAe,
    /// Privatize the corpus at the configured privacy levels.
    Privatize {
        /// Only these levels; repeatable. Defaults to every configured level.
        #[arg(long = "level", value_name = "NAME")]
        levels: Vec<String>,
    },
    /// Train a biometric attacker on one level's training subjects.
    TrainAttacker {
        /// Privacy level whose data is used; the raw corpus when omitted.
        #[arg(long, value_name = "NAME")]
        level: Option<String>,
    },
    /// Evaluate every level and write the trade-off report and figure data.
    Evaluate,
    /// Print the trade-off table of one or more reports.
    Report {
        /// Report files; defaults to the report under the output root.
        reports: Vec<PathBuf>,
    },
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let (stage, result) = commands::run(&cli);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {stage}: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
