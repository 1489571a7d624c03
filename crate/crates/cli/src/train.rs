use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cdt_core::{run as run_tag, CostMode, ImpurityKind, PreparedDataset, Tag, TrainOptions};
use clap::Args;
use log::{info, warn};

use crate::io::{append_rows, rows_to_csv, write_atomic, ResultRow};
use crate::prep::parse_costs;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Prepared dataset JSON (from `cdt prep`).
    pub data: PathBuf,
    /// Algorithm tag: enhanced-c45, enhanced-cart, asr, ip, bal, c45, cart,
    /// c-c45, c-cart; a `p` prefix adds pruning.
    #[arg(long, value_parser = parse_tag)]
    pub tag: Tag,
    /// Fixed λ for enhanced tags.
    #[arg(long, conflicts_with = "tune")]
    pub lambda: Option<f64>,
    /// Tune λ on the validation split (the default for enhanced tags).
    #[arg(long)]
    pub tune: bool,
    /// Prune with α chosen on the validation split.
    #[arg(long)]
    pub prune: bool,
    /// Impurity for enhanced tags that do not name one.
    #[arg(long, default_value = "entropy")]
    pub impurity: ImpurityKind,
    /// Reassign test costs before training.
    #[arg(long, value_parser = parse_costs)]
    pub costs: Option<CostMode>,
    /// Seed for reassigned costs (defaults to the dataset's split seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset name for the report (defaults to the file stem).
    #[arg(long)]
    pub name: Option<String>,
    /// Where to write the model JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Results CSV to append the report row to.
    #[arg(long)]
    pub results: Option<PathBuf>,
}

fn parse_tag(s: &str) -> Result<Tag, String> {
    s.parse().map_err(|e: cdt_core::Error| e.to_string())
}

pub fn run(args: TrainArgs) -> Result<ExitCode> {
    let mut data = PreparedDataset::load(&args.data)
        .with_context(|| format!("loading {}", args.data.display()))?;
    if let Some(mode) = args.costs {
        data = data.with_cost_mode(mode, args.seed.unwrap_or(data.seed));
    }
    if args.tune && args.tag.algorithm != cdt_core::Algorithm::Enhanced {
        warn!("--tune has no effect on tag {}", args.tag);
    }
    let options = TrainOptions {
        lambda: args.lambda,
        impurity: args.impurity,
        prune: args.prune,
    };
    let name = args
        .name
        .clone()
        .or_else(|| {
            args.data
                .file_stem()
                .and_then(|s| s.to_str())
                .map(str::to_string)
        })
        .unwrap_or_else(|| "dataset".into());
    let (outcome, report) = run_tag(&name, &data, &args.tag, &options)?;
    if let Some(t) = &outcome.tuning {
        for p in &t.trace {
            info!(
                "lambda {} auc {:?} cost {}",
                p.lambda, p.auc, p.expected_cost
            );
        }
    }
    write_atomic(&args.out, outcome.tree.to_json()?.as_bytes())?;

    let row = ResultRow::from(&report);
    if let Some(path) = &args.results {
        append_rows(path, std::slice::from_ref(&row))?;
    }
    print!("{}", String::from_utf8(rows_to_csv(&[row], true)?)?);
    if let Some(l) = report.lambda {
        println!("lambda={l}");
    }
    if let Some(a) = report.alpha {
        println!("alpha={a} (unpruned size {})", outcome.unpruned_size);
    }
    Ok(ExitCode::SUCCESS)
}
