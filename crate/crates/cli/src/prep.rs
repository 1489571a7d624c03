use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cdt_core::dataset::{ColumnType, CsvOptions, DEFAULT_BINS, DEFAULT_THETA};
use cdt_core::{prepare, CostMode, PrepConfig, PreparedDataset, RawTable};
use clap::Args;

use crate::io::write_atomic;

/// Options shared by every command that reads a raw CSV.
#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Label column.
    #[arg(long, default_value = "class")]
    pub label: String,
    /// Force a column's type, as `name=numeric` or `name=categorical`.
    #[arg(long = "type", value_name = "COLUMN=TYPE", value_parser = parse_type)]
    pub types: Vec<(String, ColumnType)>,
    /// Column to leave out.
    #[arg(long)]
    pub ignore: Vec<String>,
    /// Bins per numeric column.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Minimum leaf mass as a fraction of the training weight.
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    /// Test costs.
    #[arg(long, default_value = "unit", value_parser = parse_costs)]
    pub costs: CostMode,
    /// Seed for the split and for random costs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Input CSV with a header row.
    pub csv: PathBuf,
    #[command(flatten)]
    pub table: TableArgs,
    /// Where to write the prepared dataset JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_costs(s: &str) -> Result<CostMode, String> {
    s.parse().map_err(|e: cdt_core::Error| e.to_string())
}

fn parse_type(s: &str) -> Result<(String, ColumnType), String> {
    let (name, ty) = s.split_once('=').ok_or("expected COLUMN=TYPE")?;
    let ty = match ty {
        "numeric" => ColumnType::Numeric,
        "categorical" => ColumnType::Categorical,
        other => return Err(format!("unknown column type `{other}`")),
    };
    Ok((name.to_string(), ty))
}

pub fn load_table(path: &Path, args: &TableArgs) -> Result<RawTable> {
    let options = CsvOptions {
        types: args.types.clone(),
        ignore: args.ignore.clone(),
    };
    RawTable::from_csv_path(path, &args.label, &options)
        .with_context(|| format!("reading {}", path.display()))
}

pub fn prepare_table(table: &RawTable, args: &TableArgs) -> Result<PreparedDataset> {
    if args.bins == 0 {
        bail!("--bins must be at least 1");
    }
    let mut config = PrepConfig::new(args.seed)
        .cost_mode(args.costs)
        .theta(args.theta);
    config.bins = args.bins;
    Ok(prepare(table, &config)?)
}

/// `name: n=.. m=.. l=..` in the shape of a dataset summary table.
pub fn summary_line(name: &str, data: &PreparedDataset) -> String {
    format!(
        "{name}: n={} m={} l={} (dropped {} rows with missing values; {} training objects)",
        data.n_raw,
        data.tests.len(),
        data.classes.len(),
        data.dropped_rows,
        data.train.rows.len()
    )
}

pub fn run(args: PrepArgs) -> Result<ExitCode> {
    let table = load_table(&args.csv, &args.table)?;
    let data = prepare_table(&table, &args.table)?;
    write_atomic(&args.out, data.to_json()?.as_bytes())?;
    let name = args
        .csv
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    println!("{}", summary_line(name, &data));
    Ok(ExitCode::SUCCESS)
}
