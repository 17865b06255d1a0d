//! `icf`: synthetic data, cross-validation, training, prediction and reports
//! for coding activity reports with ICF mobility codes.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 runtime failure.

mod commands;
mod config;
mod output;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use icf_core::eval::EvalMode;

/// A failed command: the stage it failed in, the message, and the exit code.
#[derive(Debug)]
pub struct Failure {
    stage: String,
    message: String,
    code: u8,
}

impl Failure {
    fn new(stage: &str, message: String, code: u8) -> Self {
        Failure {
            stage: stage.to_string(),
            message,
            code,
        }
    }

    pub fn usage(stage: &str, message: String) -> Self {
        Self::new(stage, message, 1)
    }

    pub fn data(stage: &str, message: String) -> Self {
        Self::new(stage, message, 2)
    }

    pub fn runtime(stage: &str, message: String) -> Self {
        Self::new(stage, message, 3)
    }
}

pub trait Stage<T> {
    fn usage(self, stage: &str) -> Result<T, Failure>;
    fn data(self, stage: &str) -> Result<T, Failure>;
    fn runtime(self, stage: &str) -> Result<T, Failure>;
}

impl<T, E: Display> Stage<T> for Result<T, E> {
    fn usage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::usage(stage, format!("{e:#}")))
    }

    fn data(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::data(stage, format!("{e:#}")))
    }

    fn runtime(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::runtime(stage, format!("{e:#}")))
    }
}

/// Data error or runtime failure, depending on the library error.
pub trait Computed<T> {
    fn computed(self, stage: &str) -> Result<T, Failure>;
}

impl<T> Computed<T> for icf_core::Result<T> {
    fn computed(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| {
            let code = if e.is_data_error() { 2 } else { 3 };
            Failure::new(stage, e.to_string(), code)
        })
    }
}

#[derive(Parser)]
#[command(name = "icf", version, about = "Code activity reports with ICF mobility codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with labels, definitions, word vectors and a sample config
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4527)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Chance that a context word is replaced by another code's trigger word
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Word vector dimension
        #[arg(long, default_value_t = 100)]
        dim: usize,
        /// Attach per-token contextual vectors, mixing each word vector with this share of its neighbours
        #[arg(long)]
        contextual_mix: Option<f64>,
    },
    /// Validate a config and write its fold plan
    Prep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-validate every configured system
    Cv {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate in one mode only
        #[arg(long)]
        mode: Option<EvalMode>,
    },
    /// Fit one system and save it as a model file
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        system: String,
        #[arg(long)]
        out: PathBuf,
        /// Fit on this fold's training split, choosing the grid entry on its development split
        #[arg(long)]
        fold: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label a dataset with a saved model
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Word vectors, required by models with embedding features
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-code similarity of candidate-selection models
        #[arg(long)]
        scores: bool,
    },
    /// Print macro-F1 and per-label tables from a cv output directory
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mode: Option<EvalMode>,
        /// Also write the tables to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth {
            out,
            n,
            seed,
            noise,
            dim,
            contextual_mix,
        } => commands::synth(&commands::SynthArgs {
            out,
            n,
            seed,
            noise,
            dim,
            contextual_mix,
        }),
        Command::Prep { config, out, seed } => commands::prep(&config, &out, seed),
        Command::Cv {
            config,
            out,
            seed,
            mode,
        } => commands::cv(&config, &out, seed, mode),
        Command::Train {
            config,
            system,
            out,
            fold,
            seed,
        } => commands::train(&config, &system, &out, fold, seed),
        Command::Predict {
            model,
            dataset,
            embeddings,
            out,
            scores,
        } => commands::predict(&model, &dataset, embeddings.as_deref(), &out, scores),
        Command::Report { input, mode, out } => commands::report(&input, mode, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("icf: {} failed: {}", f.stage, f.message);
            ExitCode::from(f.code)
        }
    }
}
