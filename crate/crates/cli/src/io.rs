//! Small file helpers and the results CSV row.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use cdt_core::RunReport;
use serde::{Deserialize, Serialize};

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// One line of a results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub tag: String,
    pub cost_mode: String,
    pub seed: u64,
    pub auc: Option<f64>,
    pub expected_cost: f64,
    pub expected_height: f64,
    pub tree_size: usize,
    pub wall_ms: u64,
}

impl From<&RunReport> for ResultRow {
    fn from(r: &RunReport) -> Self {
        ResultRow {
            dataset: r.dataset.clone(),
            tag: r.tag.clone(),
            cost_mode: r.cost_mode.clone(),
            seed: r.seed,
            auc: r.auc,
            expected_cost: r.expected_cost,
            expected_height: r.expected_height,
            tree_size: r.tree_size,
            wall_ms: r.wall_ms,
        }
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<ResultRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ResultRow], header: bool) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header)
        .from_writer(Vec::new());
    if rows.is_empty() && header {
        w.write_record([
            "dataset",
            "tag",
            "cost_mode",
            "seed",
            "auc",
            "expected_cost",
            "expected_height",
            "tree_size",
            "wall_ms",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Appends rows, writing the header first if the file is new or empty.
pub fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    use std::io::Write;
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    f.write_all(&rows_to_csv(rows, fresh)?)?;
    Ok(())
}
