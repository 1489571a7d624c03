#![allow(dead_code)]

use std::path::PathBuf;

use cdt_core::dataset::{prepare, CostMode, CsvOptions, PrepConfig, PreparedDataset, RawTable};

pub const DATASETS: [&str; 3] = ["iris", "breast-w", "tic-tac-toe"];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn label_of(name: &str) -> &'static str {
    match name {
        "iris" => "species",
        _ => "class",
    }
}

pub fn table(name: &str) -> RawTable {
    let path = data_dir().join(format!("{name}.csv"));
    RawTable::from_csv_path(&path, label_of(name), &CsvOptions::default())
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn prepared(name: &str, seed: u64, mode: CostMode) -> PreparedDataset {
    prepare(&table(name), &PrepConfig::new(seed).cost_mode(mode)).unwrap()
}

pub fn prepared_with_theta(name: &str, seed: u64, mode: CostMode, theta: f64) -> PreparedDataset {
    prepare(
        &table(name),
        &PrepConfig::new(seed).cost_mode(mode).theta(theta),
    )
    .unwrap()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
