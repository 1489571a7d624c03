//! Raw tabular input.

use std::io::Read;
use std::path::Path;

use log::info;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Declared type of a feature column when reading CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub names: Vec<String>,
    pub features: Vec<Column>,
    pub labels: Vec<String>,
    pub label_name: String,
    /// Rows discarded for missing values.
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Columns forced to a type; the rest are numeric iff every value parses.
    pub types: Vec<(String, ColumnType)>,
    /// Columns to leave out entirely (identifiers and the like).
    pub ignore: Vec<String>,
}

fn is_missing(s: &str) -> bool {
    matches!(s, "" | "?" | "NA" | "na" | "NaN" | "nan")
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn from_csv_path(
        path: impl AsRef<Path>,
        label: &str,
        options: &CsvOptions,
    ) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, label, options)
    }

    /// Reads a CSV with a header row. Rows with a missing value in any used
    /// column are dropped and counted.
    pub fn from_csv_reader<R: Read>(reader: R, label: &str, options: &CsvOptions) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let label_idx = header
            .iter()
            .position(|h| h == label)
            .ok_or_else(|| Error::UnknownColumn(label.to_string()))?;
        for name in options
            .ignore
            .iter()
            .chain(options.types.iter().map(|(n, _)| n))
        {
            if !header.contains(name) {
                return Err(Error::UnknownColumn(name.clone()));
            }
        }
        let keep: Vec<usize> = (0..header.len())
            .filter(|&i| i != label_idx && !options.ignore.contains(&header[i]))
            .collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); keep.len()];
        let mut labels = Vec::new();
        let mut dropped = 0;
        for record in rdr.records() {
            let record = record?;
            let lab = record.get(label_idx).unwrap_or("");
            if is_missing(lab)
                || keep
                    .iter()
                    .any(|&i| is_missing(record.get(i).unwrap_or("")))
            {
                dropped += 1;
                continue;
            }
            labels.push(lab.to_string());
            for (slot, &i) in keep.iter().enumerate() {
                cells[slot].push(record[i].to_string());
            }
        }
        if dropped > 0 {
            info!("dropped {dropped} rows with missing values");
        }
        if labels.is_empty() {
            return Err(Error::Empty("no complete rows in CSV"));
        }
        let mut names = Vec::with_capacity(keep.len());
        let mut features = Vec::with_capacity(keep.len());
        for (slot, &i) in keep.iter().enumerate() {
            let name = header[i].clone();
            let declared = options
                .types
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, t)| *t);
            let values = std::mem::take(&mut cells[slot]);
            let parsed: Option<Vec<f64>> = values.iter().map(|s| s.parse::<f64>().ok()).collect();
            let column = match (declared, parsed) {
                (Some(ColumnType::Categorical), _) => Column::Categorical(values),
                (_, Some(nums)) => {
                    if nums.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite { column: name });
                    }
                    Column::Numeric(nums)
                }
                (Some(ColumnType::Numeric), None) => return Err(Error::NonFinite { column: name }),
                (None, None) => Column::Categorical(values),
            };
            names.push(name);
            features.push(column);
        }
        Ok(RawTable {
            names,
            features,
            labels,
            label_name: header[label_idx].clone(),
            dropped_rows: dropped,
        })
    }
}
