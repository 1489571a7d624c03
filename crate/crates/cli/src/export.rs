use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cdt_core::TreeModel;
use clap::{Args, ValueEnum};

use crate::io::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Json,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Model JSON (from `cdt train`).
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "dot")]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ExportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let tree = TreeModel::from_json(&text)?;
    let rendered = match args.format {
        Format::Dot => tree.to_dot(),
        Format::Json => tree.to_json()? + "\n",
    };
    match &args.out {
        Some(path) => write_atomic(path, rendered.as_bytes())?,
        None => print!("{rendered}"),
    }
    Ok(ExitCode::SUCCESS)
}
