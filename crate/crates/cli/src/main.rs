//! Command-line front end: corpus statistics, training, prediction,
//! scoring and error analysis.

mod commands;
mod config;
mod fail;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Output, PredictArgs, TrainArgs};
use config::RunConfig;
use fail::{CmdResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "spantag", version, about = "Technique span tagging for Arabic text")]
struct Cli {
    /// JSON config with flat keys such as "train.phase1_epochs".
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Overrides train.shuffle_seed and features.seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppress progress and warnings on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample, technique and span-length statistics for dataset files.
    Stats {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Train a tagger and write the model plus a per-epoch telemetry CSV.
    Train {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
    /// Tag every sample of INPUT and write prediction JSONL.
    Predict {
        model: Option<PathBuf>,
        input: Option<PathBuf>,
        output: Option<PathBuf>,
        /// Keep each sample's text in the output.
        #[arg(long)]
        with_text: bool,
    },
    /// Span-overlap F1 of one or more prediction files; several give a leaderboard.
    Score {
        gold: PathBuf,
        #[arg(required = true)]
        pred: Vec<PathBuf>,
    },
    /// Character-level confusion matrix and per-technique recall.
    Analyze {
        gold: PathBuf,
        pred: PathBuf,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
}

fn run(cli: Cli) -> CmdResult {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(Failure::user)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.apply_seed(seed);
    }
    let out = Output {
        json: cli.json,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Stats { paths } => commands::stats(&paths, &out),
        Command::Train {
            train,
            dev,
            model,
            telemetry,
        } => commands::train(
            &config,
            TrainArgs {
                train,
                dev,
                model,
                telemetry,
            },
            &out,
        ),
        Command::Predict {
            model,
            input,
            output,
            with_text,
        } => commands::predict(
            &config,
            PredictArgs {
                model,
                input,
                output,
                with_text,
            },
            &out,
        ),
        Command::Score { gold, pred } => commands::score(&config, &gold, &pred, &out),
        Command::Analyze { gold, pred, top_k } => commands::analyze(&config, &gold, &pred, top_k, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}
