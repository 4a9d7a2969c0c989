use std::fmt;
use std::io;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glossmwe::corpus::CorpusError;
use glossmwe::eval::EvalError;
use glossmwe::lexicon::LexiconError;
use glossmwe::pipeline::PipelineError;
use glossmwe::scorer::ScorerError;
use glossmwe::training::TrainingError;

mod commands;
mod config;
mod manifest;

/// Rejected input or configuration; exits with status 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Parser)]
#[command(name = "glossmwe", version, about = "MWE identification and gloss-based WSD")]
struct Cli {
    /// Raise log verbosity (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict MWEs in a corpus.
    Extract(commands::extract::Args),
    /// Score predictions against gold annotation.
    Eval(commands::eval::Args),
    /// Turn a sense-annotated corpus into labeled training targets.
    Preprocess(commands::preprocess::Args),
    /// Train a scorer.
    Train(commands::train::Args),
    /// Predict a sense for every sense-annotated target.
    Wsd(commands::wsd::Args),
    /// Write unlabeled MWE candidates for offline annotation.
    ExportCandidates(commands::export::Args),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>()
            || cause.is::<LexiconError>()
            || cause.is::<CorpusError>()
            || cause.is::<EvalError>()
            || cause.is::<PipelineError>()
            || cause.is::<ScorerError>()
            || cause.is::<toml::de::Error>()
            || cause.is::<serde_json::Error>()
        {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<TrainingError>() {
            return match e {
                TrainingError::DivergedLoss { .. } | TrainingError::EmptyBatch => 1,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<io::Error>() {
            if matches!(e.kind(), io::ErrorKind::NotFound | io::ErrorKind::InvalidData) {
                return 2;
            }
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Extract(a) => commands::extract::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Preprocess(a) => commands::preprocess::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Wsd(a) => commands::wsd::run(a),
        Command::ExportCandidates(a) => commands::export::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
