use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cdt_core::dataset::{ColumnType, CsvOptions, DEFAULT_BINS, DEFAULT_THETA};
use cdt_core::{
    prepare, run as run_tag, CostMode, PrepConfig, PreparedDataset, RawTable, Tag, TrainOptions,
};
use clap::Args;
use log::{error, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{read_rows, rows_to_csv, write_atomic, ResultRow};
use crate::EXIT_USAGE;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Plan JSON.
    pub plan: PathBuf,
    /// Output directory (overrides the plan's `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    /// CSV path, relative to the plan file.
    pub path: PathBuf,
    #[serde(default = "default_label")]
    pub label: String,
    /// Forced column types: `"numeric"` or `"categorical"`.
    #[serde(default)]
    pub types: BTreeMap<String, String>,
    #[serde(default)]
    pub ignore: Vec<String>,
}

fn default_label() -> String {
    "class".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LambdaPolicy {
    #[default]
    Tuned,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub datasets: Vec<DatasetSpec>,
    pub tags: Vec<String>,
    #[serde(default = "default_modes")]
    pub cost_modes: Vec<CostMode>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub lambda: LambdaPolicy,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_modes() -> Vec<CostMode> {
    vec![CostMode::Unit, CostMode::Random]
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Cell {
    dataset: String,
    cost_mode: String,
    tag: String,
    seed: u64,
}

impl Cell {
    fn of(row: &ResultRow) -> Self {
        Cell {
            dataset: row.dataset.clone(),
            cost_mode: row.cost_mode.clone(),
            tag: row.tag.clone(),
            seed: row.seed,
        }
    }

    fn file_name(&self) -> String {
        let clean = |s: &str| {
            s.replace(
                |c: char| !c.is_ascii_alphanumeric() && c != '-' && c != '.',
                "_",
            )
        };
        format!(
            "{}__{}__{}__{}.json",
            clean(&self.dataset),
            clean(&self.tag),
            self.cost_mode,
            self.seed
        )
    }
}

#[derive(Debug, Serialize)]
struct Stat {
    mean: f64,
    stderr: f64,
    n: usize,
}

fn stat(xs: &[f64]) -> Option<Stat> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let stderr = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Some(Stat {
        mean,
        stderr,
        n: xs.len(),
    })
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    dataset: String,
    cost_mode: String,
    tag: String,
    runs: usize,
    auc: Option<Stat>,
    expected_cost: Option<Stat>,
    expected_height: Option<Stat>,
    tree_size: Option<Stat>,
}

#[derive(Debug, Serialize)]
struct Failure {
    dataset: String,
    cost_mode: String,
    tag: String,
    seed: u64,
    error: String,
}

#[derive(Debug, Serialize)]
struct Summary {
    cost_measured_on: &'static str,
    auc_measured_on: &'static str,
    groups: Vec<GroupSummary>,
    failed: Vec<Failure>,
}

pub fn load_plan(path: &Path) -> Result<BenchPlan> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let plan: BenchPlan =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if plan.datasets.is_empty()
        || plan.tags.is_empty()
        || plan.seeds.is_empty()
        || plan.cost_modes.is_empty()
    {
        bail!("plan needs at least one dataset, tag, cost mode and seed");
    }
    for t in &plan.tags {
        t.parse::<Tag>()?;
    }
    Ok(plan)
}

fn load_table(spec: &DatasetSpec, base: &Path) -> Result<RawTable> {
    let mut types = Vec::new();
    for (col, ty) in &spec.types {
        let ty = match ty.as_str() {
            "numeric" => ColumnType::Numeric,
            "categorical" => ColumnType::Categorical,
            other => bail!("dataset {}: unknown column type `{other}`", spec.name),
        };
        types.push((col.clone(), ty));
    }
    let options = CsvOptions {
        types,
        ignore: spec.ignore.clone(),
    };
    let path = base.join(&spec.path);
    RawTable::from_csv_path(&path, &spec.label, &options)
        .with_context(|| format!("dataset {}: reading {}", spec.name, path.display()))
}

pub fn run(args: BenchArgs) -> Result<ExitCode> {
    let plan = load_plan(&args.plan)?;
    let base = args.plan.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out = match (&args.out, &plan.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => base.join("bench"),
    };
    let cells_dir = out.join("cells");
    std::fs::create_dir_all(&cells_dir)
        .with_context(|| format!("creating {}", cells_dir.display()))?;
    write_atomic(
        &out.join("plan.json"),
        serde_json::to_string_pretty(&plan)?.as_bytes(),
    )?;

    let results_path = out.join("results.csv");
    let mut rows = if results_path.exists() {
        read_rows(&results_path)?
    } else {
        Vec::new()
    };
    let done: HashSet<Cell> = rows.iter().map(Cell::of).collect();

    let tags: Vec<Tag> = plan
        .tags
        .iter()
        .map(|t| t.parse())
        .collect::<Result<_, _>>()?;
    let mut todo = Vec::new();
    for d in &plan.datasets {
        for &mode in &plan.cost_modes {
            for tag in &tags {
                for &seed in &plan.seeds {
                    let cell = Cell {
                        dataset: d.name.clone(),
                        cost_mode: mode.to_string(),
                        tag: tag.to_string(),
                        seed,
                    };
                    if !done.contains(&cell) {
                        todo.push((d, mode, *tag, seed, cell));
                    }
                }
            }
        }
    }
    info!(
        "{} cells to run, {} already present",
        todo.len(),
        done.len()
    );

    let mut failed = Vec::new();
    let mut tables: HashMap<&str, RawTable> = HashMap::new();
    for d in &plan.datasets {
        if !todo.iter().any(|t| t.0.name == d.name) {
            continue;
        }
        match load_table(d, &base) {
            Ok(t) => {
                tables.insert(d.name.as_str(), t);
            }
            Err(e) => {
                error!("{e:#}");
                for t in todo.iter().filter(|t| t.0.name == d.name) {
                    failed.push(failure(&t.4, &e));
                }
            }
        }
    }

    // one preparation per (dataset, seed, cost mode)
    let mut keys: Vec<(&str, u64, CostMode)> = todo
        .iter()
        .filter(|t| tables.contains_key(t.0.name.as_str()))
        .map(|t| (t.0.name.as_str(), t.3, t.1))
        .collect();
    keys.sort();
    keys.dedup();
    let prepared: HashMap<(&str, u64, CostMode), Result<PreparedDataset, String>> = keys
        .par_iter()
        .map(|&(name, seed, mode)| {
            let config = PrepConfig {
                bins: plan.bins,
                ..PrepConfig::new(seed).cost_mode(mode).theta(plan.theta)
            };
            (
                (name, seed, mode),
                prepare(&tables[name], &config).map_err(|e| e.to_string()),
            )
        })
        .collect();

    let options = TrainOptions {
        lambda: match plan.lambda {
            LambdaPolicy::Tuned => None,
            LambdaPolicy::Fixed(l) => Some(l),
        },
        ..Default::default()
    };
    let outcomes: Vec<(Cell, Result<ResultRow>)> = todo
        .par_iter()
        .filter_map(|(d, mode, tag, seed, cell)| {
            let data = prepared.get(&(d.name.as_str(), *seed, *mode))?;
            let result = data
                .as_ref()
                .map_err(|e| anyhow::anyhow!("{e}"))
                .and_then(|data| {
                    let (_, report) = run_tag(&d.name, data, tag, &options)?;
                    write_atomic(
                        &cells_dir.join(cell.file_name()),
                        serde_json::to_string_pretty(&report)?.as_bytes(),
                    )?;
                    Ok(ResultRow::from(&report))
                });
            Some((cell.clone(), result))
        })
        .collect();
    for (cell, result) in outcomes {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => {
                error!("cell {cell:?}: {e:#}");
                failed.push(failure(&cell, &e));
            }
        }
    }

    rows.sort_by(|a, b| Cell::of(a).cmp(&Cell::of(b)));
    write_atomic(&results_path, &rows_to_csv(&rows, true)?)?;
    let summary = Summary {
        cost_measured_on: "train",
        auc_measured_on: "test",
        groups: summarize(&rows),
        failed,
    };
    write_atomic(
        &out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    println!(
        "{} rows in {}; {} failed cells",
        rows.len(),
        results_path.display(),
        summary.failed.len()
    );
    Ok(if summary.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_USAGE)
    })
}

fn failure(cell: &Cell, e: &anyhow::Error) -> Failure {
    Failure {
        dataset: cell.dataset.clone(),
        cost_mode: cell.cost_mode.clone(),
        tag: cell.tag.clone(),
        seed: cell.seed,
        error: format!("{e:#}"),
    }
}

fn summarize(rows: &[ResultRow]) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<(String, String, String), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.dataset.clone(), r.cost_mode.clone(), r.tag.clone()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((dataset, cost_mode, tag), rs)| {
            let col = |f: &dyn Fn(&ResultRow) -> Option<f64>| {
                stat(&rs.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            GroupSummary {
                dataset,
                cost_mode,
                tag,
                runs: rs.len(),
                auc: col(&|r| r.auc),
                expected_cost: col(&|r| Some(r.expected_cost)),
                expected_height: col(&|r| Some(r.expected_height)),
                tree_size: col(&|r| Some(r.tree_size as f64)),
            }
        })
        .collect()
}
