//! `rmdl`: train, evaluate and apply random multimodel ensembles.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 numeric
//! failure during training.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rmdl_core::corpus::CorpusFormat;
use rmdl_core::synthetic::Difficulty;

#[derive(Parser)]
#[command(
    name = "rmdl",
    version,
    about = "Random multimodel deep learning text classifier"
)]
struct Cli {
    /// Only warnings and errors on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an ensemble from a JSON run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Overrides the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Concurrent model trainings (default: all processors).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Report metrics of a trained model on a labeled corpus.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: Option<CorpusFormat>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write `{id, votes, final}` rows for every input document.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: Option<CorpusFormat>,
        /// Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Metrics table from a predictions file and a labeled corpus.
    Metrics {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: Option<CorpusFormat>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Corpus summary: class balance and token-count histogram.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: Option<CorpusFormat>,
    },
    /// Generate the synthetic two-class corpus.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 400)]
        docs_per_class: usize,
        #[arg(long, default_value = "easy", value_parser = parse_difficulty)]
        difficulty: Difficulty,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write a ten-word toy embedding file.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        dim: usize,
    },
}

fn parse_format(s: &str) -> Result<CorpusFormat, String> {
    s.parse().map_err(|e: rmdl_core::Error| e.to_string())
}

fn parse_difficulty(s: &str) -> Result<Difficulty, String> {
    s.parse().map_err(|e: rmdl_core::Error| e.to_string())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Train {
            config,
            corpus,
            output,
            jobs,
        } => commands::train(commands::TrainArgs {
            config,
            corpus,
            output,
            jobs,
        }),
        Command::Eval {
            model,
            corpus,
            format,
            beta,
            json,
        } => commands::eval(&model, &corpus, format, beta, json.as_deref()),
        Command::Predict {
            model,
            input,
            format,
            output,
        } => commands::predict(&model, &input, format, output.as_deref()),
        Command::Metrics {
            predictions,
            labels,
            format,
            beta,
        } => commands::metrics(&predictions, &labels, format, beta),
        Command::Stats { corpus, format } => commands::stats(&corpus, format),
        Command::Synth {
            output,
            docs_per_class,
            difficulty,
            seed,
            embeddings,
            dim,
        } => commands::synth(commands::SynthArgs {
            output,
            docs_per_class,
            difficulty,
            seed,
            embeddings,
            dim,
        }),
    }
}

/// 2 when a numeric failure is anywhere in the chain, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err
        .chain()
        .filter_map(|e| e.downcast_ref::<rmdl_core::Error>())
        .any(|e| !e.is_validation());
    if numeric {
        2
    } else {
        1
    }
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain()
        .filter_map(|e| e.downcast_ref::<std::io::Error>())
        .any(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // reader went away, e.g. `rmdl stats ... | head`
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
