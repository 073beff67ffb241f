mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::ReportOutputs;
use crate::config::{Overrides, PipelineConfig};
use crate::error::Result;

/// Initialize a target-language embedding table from a source model,
/// a bilingual dictionary and character n-gram embeddings.
#[derive(Parser, Debug)]
#[command(name = "lexbridge", version, about)]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized stage; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for training and mapping; overrides the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for artifacts; overrides the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the symmetric bigram corpus from the dictionary.
    Symmetrize {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train the n-gram embedding model on the corpus.
    TrainSubword {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Map every target token onto weighted source tokens.
    Map {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build the target embedding table from the mapping.
    Convert {
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write mapping statistics and examples.
    Report {
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        stats_json: Option<PathBuf>,
        #[arg(long)]
        stats_tsv: Option<PathBuf>,
        /// Nearest source tokens of every n-gram matched token, as TSV.
        #[arg(long)]
        neighbors: Option<PathBuf>,
    },
    /// Run all stages and write a manifest.
    Pipeline,
}

fn run(cli: Cli) -> Result<PathBuf> {
    let overrides = Overrides {
        seed: cli.seed,
        threads: cli.threads,
        output_dir: cli.output_dir,
    };
    let cfg = PipelineConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Symmetrize { output } => commands::symmetrize(&cfg, output.as_deref()),
        Command::TrainSubword { corpus, output } => {
            commands::train_subword(&cfg, corpus.as_deref(), output.as_deref())
        }
        Command::Map { model, output } => commands::map(&cfg, model.as_deref(), output.as_deref()),
        Command::Convert { mapping, output } => {
            commands::convert_embeddings(&cfg, mapping.as_deref(), output.as_deref())
        }
        Command::Report {
            mapping,
            output,
            stats_json,
            stats_tsv,
            neighbors,
        } => {
            let outputs = ReportOutputs {
                report: output.as_deref(),
                stats_json: stats_json.as_deref(),
                stats_tsv: stats_tsv.as_deref(),
                neighbors: neighbors.as_deref(),
            };
            commands::report(&cfg, mapping.as_deref(), &outputs)
        }
        Command::Pipeline => commands::pipeline(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
