use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use puclust::data::{load_csv, preprocess, summarize, write_summary_csv, PreprocessConfig};
use puclust::harness::{emit_report, load_config, run_experiment, summarize_raw};

#[derive(Parser)]
#[command(name = "puclust", version, about = "Positive-unlabeled learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the CSV reports.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Rebuild the summary CSVs from a raw result file.
    Summarize {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dataset utilities.
    Datasets {
        #[command(subcommand)]
        command: DatasetsCommand,
    },
}

#[derive(Subcommand)]
enum DatasetsCommand {
    /// Print the summary statistics of a CSV dataset after preprocessing.
    Describe {
        path: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 0.9)]
        corr_threshold: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => load_config(&config)
            .and_then(|cfg| run_experiment(&cfg))
            .and_then(|rows| {
                let files = emit_report(&rows, &out)?;
                println!("raw results: {}", files.raw.display());
                println!("summary:     {}", files.summary.display());
                println!("timing:      {}", files.timing.display());
                Ok(rows.iter().filter(|r| r.failed()).count())
            }),
        Command::Summarize { raw, out } => summarize_raw(&raw, &out).map(|_| 0),
        Command::Datasets {
            command: DatasetsCommand::Describe { path, target, corr_threshold },
        } => load_csv(&path, &target)
            .and_then(|raw| {
                preprocess(
                    &raw,
                    &PreprocessConfig {
                        corr_threshold,
                        ..Default::default()
                    },
                )
            })
            .and_then(|ds| {
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                write_summary_csv(io::stdout().lock(), &name, &summarize(&ds))
            })
            .map(|_| 0),
    };
    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            error!("{failed} cells failed");
            ExitCode::from(failed.min(255) as u8)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
