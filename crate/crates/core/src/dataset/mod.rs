//! Preprocessing: binning, one-hot encoding, coalescing, costs and splits.

mod binning;
mod table;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use binning::{bin_numeric, Binning};
pub use table::{Column, ColumnType, CsvOptions, RawTable};

use crate::coverage::majority;
use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceParts};

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_BINS: usize = 5;
pub const DEFAULT_THETA: f64 = 0.005;
/// Smallest leaf mass, in training rows, that a positive θ may imply.
pub const MIN_LEAF_ROWS: u64 = 2;
pub const MAX_RANDOM_COST: u32 = 10;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    #[default]
    Unit,
    Random,
}

impl CostMode {
    pub fn name(self) -> &'static str {
        match self {
            CostMode::Unit => "unit",
            CostMode::Random => "random",
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(CostMode::Unit),
            "random" => Ok(CostMode::Random),
            other => Err(Error::InvalidInstance(format!(
                "unknown cost mode `{other}`"
            ))),
        }
    }
}

/// Unit costs, or i.i.d. uniform integers in `1..=10` drawn from `seed`.
pub fn assign_costs(m: usize, mode: CostMode, seed: u64) -> Vec<u32> {
    match mode {
        CostMode::Unit => vec![1; m],
        CostMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..m).map(|_| rng.gen_range(1..=MAX_RANDOM_COST)).collect()
        }
    }
}

/// Threshold in multiplicity units. A positive θ never implies leaves
/// lighter than two training rows.
pub fn theta_units(theta: f64, total_weight: u64) -> Result<u64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidInstance(format!(
            "theta {theta} outside [0, 1]"
        )));
    }
    if theta == 0.0 {
        return Ok(0);
    }
    let units = (theta * total_weight as f64).floor() as u64;
    Ok(units.max(MIN_LEAF_ROWS).min(total_weight))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: f64,
    pub validation: f64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        SplitSpec {
            seed,
            train: 0.7,
            validation: 0.1,
        }
    }

    pub fn test(&self) -> f64 {
        1.0 - self.train - self.validation
    }

    /// Shuffles `0..n` and cuts it into train, validation and test parts,
    /// each returned in ascending order.
    pub fn split_indices(&self, n: usize) -> Result<SplitIndices> {
        if self.train <= 0.0 || self.validation < 0.0 || self.test() < -1e-12 {
            return Err(Error::InvalidInstance(format!(
                "bad split fractions {}/{}/{}",
                self.train,
                self.validation,
                self.test()
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let n_train = ((self.train * n as f64).round() as usize).clamp(1, n);
        let n_val = ((self.validation * n as f64).round() as usize).min(n - n_train);
        let mut train = order[..n_train].to_vec();
        let mut validation = order[n_train..n_train + n_val].to_vec();
        let mut test = order[n_train + n_val..].to_vec();
        train.sort_unstable();
        validation.sort_unstable();
        test.sort_unstable();
        Ok(SplitIndices {
            train,
            validation,
            test,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FeatureEncoding {
    Categorical { levels: Vec<String> },
    Numeric { binning: Binning },
}

impl FeatureEncoding {
    fn width(&self) -> usize {
        match self {
            FeatureEncoding::Categorical { levels } => levels.len(),
            FeatureEncoding::Numeric { binning } => binning.n_bins(),
        }
    }
}

/// One-hot encoder fitted on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub columns: Vec<(String, FeatureEncoding)>,
}

impl Encoder {
    pub fn fit(table: &RawTable, rows: &[usize], bins: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("no training rows to fit the encoder"));
        }
        let mut columns = Vec::with_capacity(table.features.len());
        for (name, column) in table.names.iter().zip(&table.features) {
            let enc = match column {
                Column::Categorical(values) => {
                    let mut levels: Vec<String> = rows.iter().map(|&r| values[r].clone()).collect();
                    levels.sort();
                    levels.dedup();
                    FeatureEncoding::Categorical { levels }
                }
                Column::Numeric(values) => {
                    let fit: Vec<f64> = rows.iter().map(|&r| values[r]).collect();
                    let (binning, _) = bin_numeric(name, &fit, bins)?;
                    FeatureEncoding::Numeric { binning }
                }
            };
            columns.push((name.clone(), enc));
        }
        Ok(Encoder { columns })
    }

    pub fn n_tests(&self) -> usize {
        self.columns.iter().map(|(_, e)| e.width()).sum()
    }

    pub fn test_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_tests());
        for (col, enc) in &self.columns {
            match enc {
                FeatureEncoding::Categorical { levels } => {
                    names.extend(levels.iter().map(|l| format!("{col}={l}")));
                }
                FeatureEncoding::Numeric { binning } => {
                    names.extend(
                        binning
                            .ranges
                            .iter()
                            .map(|(lo, hi)| format!("{col}=[{lo},{hi}]")),
                    );
                }
            }
        }
        names
    }

    /// Binary outcomes of one raw row. Unseen categorical levels give all
    /// zeros over that column's tests.
    pub fn encode_row(&self, table: &RawTable, row: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.n_tests()];
        let mut offset = 0;
        for ((_, enc), column) in self.columns.iter().zip(&table.features) {
            let hit = match (enc, column) {
                (FeatureEncoding::Categorical { levels }, Column::Categorical(v)) => {
                    levels.binary_search(&v[row]).ok()
                }
                (FeatureEncoding::Categorical { levels }, Column::Numeric(v)) => {
                    levels.binary_search(&v[row].to_string()).ok()
                }
                (FeatureEncoding::Numeric { binning }, Column::Numeric(v)) => {
                    Some(binning.assign(v[row]))
                }
                (FeatureEncoding::Numeric { .. }, Column::Categorical(_)) => None,
            };
            if let Some(h) = hit {
                out[offset + h] = 1;
            }
            offset += enc.width();
        }
        out
    }

    pub fn binarize(&self, table: &RawTable, rows: &[usize]) -> Vec<Vec<u8>> {
        rows.iter().map(|&r| self.encode_row(table, r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coalesced {
    pub rows: Vec<Vec<u8>>,
    pub labels: Vec<usize>,
    pub weights: Vec<u64>,
}

/// Merges identical outcome vectors, in order of first appearance. The
/// merged label is the heaviest class, smallest index on ties.
pub fn coalesce(
    rows: &[Vec<u8>],
    labels: &[usize],
    weights: &[u64],
    n_classes: usize,
) -> Result<Coalesced> {
    if rows.is_empty() {
        return Err(Error::Empty("nothing to coalesce"));
    }
    if labels.len() != rows.len() || weights.len() != rows.len() {
        return Err(Error::InvalidInstance(
            "rows, labels and weights differ in length".into(),
        ));
    }
    let mut index: HashMap<&[u8], usize> = HashMap::with_capacity(rows.len());
    let mut out_rows: Vec<Vec<u8>> = Vec::new();
    let mut hist: Vec<Vec<u64>> = Vec::new();
    for ((row, &label), &w) in rows.iter().zip(labels).zip(weights) {
        if label >= n_classes {
            return Err(Error::InvalidInstance(format!(
                "label {label} out of range"
            )));
        }
        let id = *index.entry(row.as_slice()).or_insert_with(|| {
            out_rows.push(row.clone());
            hist.push(vec![0; n_classes]);
            out_rows.len() - 1
        });
        hist[id][label] += w;
    }
    let labels = hist.iter().map(|h| majority(h)).collect();
    let weights = hist.iter().map(|h| h.iter().sum()).collect();
    Ok(Coalesced {
        rows: out_rows,
        labels,
        weights,
    })
}

/// Held-out rows, encoded but not coalesced.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalSet {
    pub rows: Vec<Vec<u8>>,
    pub labels: Vec<usize>,
}

impl EvalSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepConfig {
    pub bins: usize,
    pub theta: f64,
    pub cost_mode: CostMode,
    pub split: SplitSpec,
}

impl PrepConfig {
    pub fn new(seed: u64) -> Self {
        PrepConfig {
            bins: DEFAULT_BINS,
            theta: DEFAULT_THETA,
            cost_mode: CostMode::Unit,
            split: SplitSpec::new(seed),
        }
    }

    pub fn cost_mode(mut self, mode: CostMode) -> Self {
        self.cost_mode = mode;
        self
    }

    pub fn theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }
}

/// A fully preprocessed dataset: the coalesced training instance plus the
/// encoded held-out splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDataset {
    pub format_version: u32,
    pub label: String,
    pub tests: Vec<String>,
    pub classes: Vec<String>,
    pub encoder: Encoder,
    pub train: Coalesced,
    pub validation: EvalSet,
    pub test: EvalSet,
    pub costs: Vec<u32>,
    pub cost_mode: CostMode,
    pub theta: f64,
    pub theta_units: u64,
    pub seed: u64,
    pub bins: usize,
    pub split: SplitIndices,
    pub n_raw: usize,
    pub dropped_rows: usize,
}

pub fn prepare(table: &RawTable, config: &PrepConfig) -> Result<PreparedDataset> {
    let n = table.n_rows();
    if n == 0 {
        return Err(Error::Empty("table has no rows"));
    }
    let mut classes: Vec<String> = table.labels.clone();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidInstance(format!(
            "label `{}` has fewer than two distinct values",
            table.label_name
        )));
    }
    let class_of: Vec<usize> = table
        .labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label collected above"))
        .collect();
    let split = config.split.split_indices(n)?;
    let encoder = Encoder::fit(table, &split.train, config.bins)?;
    let tests = encoder.test_names();

    let train_rows = encoder.binarize(table, &split.train);
    let train_labels: Vec<usize> = split.train.iter().map(|&r| class_of[r]).collect();
    let train = coalesce(
        &train_rows,
        &train_labels,
        &vec![1; train_rows.len()],
        classes.len(),
    )?;
    let total: u64 = train.weights.iter().sum();
    let eval = |rows: &[usize]| EvalSet {
        rows: encoder.binarize(table, rows),
        labels: rows.iter().map(|&r| class_of[r]).collect(),
    };
    let validation = eval(&split.validation);
    let test = eval(&split.test);
    let costs = assign_costs(tests.len(), config.cost_mode, config.split.seed);
    let units = theta_units(config.theta, total)?;
    info!(
        "prepared {} rows: {} tests, {} training objects from {} rows, theta {} units",
        n,
        tests.len(),
        train.rows.len(),
        split.train.len(),
        units
    );
    debug!("costs {costs:?}");
    Ok(PreparedDataset {
        format_version: DATASET_FORMAT_VERSION,
        label: table.label_name.clone(),
        tests,
        classes,
        encoder,
        train,
        validation,
        test,
        costs,
        cost_mode: config.cost_mode,
        theta: config.theta,
        theta_units: units,
        seed: config.split.seed,
        bins: config.bins,
        split,
        n_raw: n + table.dropped_rows,
        dropped_rows: table.dropped_rows,
    })
}

impl PreparedDataset {
    /// The training instance.
    pub fn instance(&self) -> Result<Instance> {
        Instance::new(InstanceParts {
            test_names: self.tests.clone(),
            arities: vec![2; self.tests.len()],
            rows: self.train.rows.clone(),
            labels: self.train.labels.clone(),
            class_names: self.classes.clone(),
            weights: self.train.weights.clone(),
            costs: self.costs.clone(),
            theta_units: self.theta_units,
        })
    }

    /// The training split as an evaluation set, one row per coalesced object.
    pub fn train_eval(&self) -> EvalSet {
        EvalSet {
            rows: self.train.rows.clone(),
            labels: self.train.labels.clone(),
        }
    }

    /// Same data with a different cost vector.
    pub fn with_cost_mode(&self, mode: CostMode, seed: u64) -> Self {
        let mut out = self.clone();
        out.costs = assign_costs(self.tests.len(), mode, seed);
        out.cost_mode = mode;
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: PreparedDataset = serde_json::from_str(text)?;
        if value.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: value.format_version,
                expected: DATASET_FORMAT_VERSION,
            });
        }
        Ok(value)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> RawTable {
        let mut csv = String::from("size,color,class\n");
        for i in 0..40 {
            let color = ["red", "green", "blue"][i % 3];
            let class = if i < 20 { "a" } else { "b" };
            csv.push_str(&format!("{},{color},{class}\n", i % 10));
        }
        RawTable::from_csv_reader(csv.as_bytes(), "class", &CsvOptions::default()).unwrap()
    }

    #[test]
    fn unit_costs() {
        assert_eq!(assign_costs(5, CostMode::Unit, 3), vec![1; 5]);
    }

    #[test]
    fn random_costs_in_range_and_seeded() {
        let a = assign_costs(200, CostMode::Random, 11);
        assert!(a.iter().all(|&c| (1..=10).contains(&c)));
        assert_eq!(a, assign_costs(200, CostMode::Random, 11));
        assert_ne!(a, assign_costs(200, CostMode::Random, 12));
    }

    #[test]
    fn coalesce_majority_and_ties() {
        let rows = vec![vec![1, 0], vec![1, 0], vec![1, 0], vec![0, 1], vec![0, 1]];
        let c = coalesce(&rows, &[0, 0, 1, 1, 0], &[1; 5], 2).unwrap();
        assert_eq!(c.rows, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(c.labels, vec![0, 0]);
        assert_eq!(c.weights, vec![3, 2]);
    }

    #[test]
    fn coalesce_distinct_rows_unchanged() {
        let rows = vec![vec![0, 0], vec![0, 1], vec![1, 0]];
        let c = coalesce(&rows, &[0, 1, 1], &[1; 3], 2).unwrap();
        assert_eq!(c.rows, rows);
        assert_eq!(c.weights, vec![1; 3]);
    }

    #[test]
    fn coalesce_empty_is_error() {
        assert!(coalesce(&[], &[], &[], 2).is_err());
    }

    #[test]
    fn one_hot_widths() {
        let t = table();
        let all: Vec<usize> = (0..t.n_rows()).collect();
        let enc = Encoder::fit(&t, &all, 5).unwrap();
        // 5 bins for size, 3 colors
        assert_eq!(enc.n_tests(), 8);
        let names = enc.test_names();
        assert_eq!(&names[5..], &["color=blue", "color=green", "color=red"]);
        for r in 0..t.n_rows() {
            let row = enc.encode_row(&t, r);
            assert_eq!(row.iter().map(|&v| v as usize).sum::<usize>(), 2);
        }
    }

    #[test]
    fn unseen_level_is_all_zero() {
        let t = table();
        let enc = Encoder::fit(&t, &[0, 1], 5).unwrap();
        // rows 0 and 1 are red and green; row 2 is blue
        let row = enc.encode_row(&t, 2);
        let color: u8 = row[row.len() - 2..].iter().sum();
        assert_eq!(color, 0);
    }

    #[test]
    fn split_partitions_rows() {
        let s = SplitSpec::new(4).split_indices(101).unwrap();
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (71, 10, 20)
        );
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.validation)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        assert_eq!(s, SplitSpec::new(4).split_indices(101).unwrap());
    }

    #[test]
    fn theta_rounding() {
        assert_eq!(theta_units(0.005, 478).unwrap(), 2);
        assert_eq!(theta_units(0.005, 100).unwrap(), 2);
        assert_eq!(theta_units(0.005, 10_000).unwrap(), 50);
        assert_eq!(theta_units(0.0, 100).unwrap(), 0);
        assert!(theta_units(1.5, 100).is_err());
    }

    #[test]
    fn prepared_is_realizable_and_normalized() {
        let p = prepare(&table(), &PrepConfig::new(0)).unwrap();
        let inst = p.instance().unwrap();
        assert!(inst.is_realizable());
        let total: f64 = (0..inst.n_objects()).map(|i| inst.probability(i)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(inst.total_weight(), p.split.train.len() as u64);
        let back = PreparedDataset::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn preparation_is_deterministic() {
        let a = prepare(&table(), &PrepConfig::new(7).cost_mode(CostMode::Random)).unwrap();
        let b = prepare(&table(), &PrepConfig::new(7).cost_mode(CostMode::Random)).unwrap();
        assert_eq!(a, b);
    }
}
