//! `cdt`: preprocess datasets, train and evaluate trees, run benchmark
//! matrices, export models and audit the coverage functions.

mod audit;
mod bench;
mod export;
mod io;
mod prep;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit code for property failures (audit violations).
pub const EXIT_PROPERTY: u8 = 1;
/// Exit code for usage and data errors.
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cdt",
    version,
    about = "Cost-efficient decision tree induction"
)]
struct Cli {
    /// Worker threads for parallel work (defaults to all cores).
    #[arg(long, global = true, env = "CDT_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bin, binarize, split and coalesce a CSV file into a prepared dataset.
    Prep(prep::PrepArgs),
    /// Train one algorithm tag on a prepared dataset.
    Train(train::TrainArgs),
    /// Run a benchmark plan (resumable).
    Bench(bench::BenchArgs),
    /// Render a model as DOT or canonical JSON.
    Export(export::ExportArgs),
    /// Exhaustive coverage-function audit and greedy/optimal ratio sweep.
    Audit(audit::AuditArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }

    let result = match cli.command {
        Command::Prep(args) => prep::run(args),
        Command::Train(args) => train::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Export(args) => export::run(args),
        Command::Audit(args) => audit::run(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
