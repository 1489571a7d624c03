//! The induction input: objects, tests, labels, probabilities, costs, threshold.
//!
//! Probabilities are integer multiplicities over a common denominator (the
//! total weight), so that `p(N) <= θ` is an exact integer comparison.

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    test_names: Vec<String>,
    arities: Vec<u8>,
    /// `columns[t][i]` is the 0-based outcome of test `t` on object `i`.
    columns: Vec<Vec<u8>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    weights: Vec<u64>,
    total_weight: u64,
    costs: Vec<u32>,
    theta_units: u64,
}

/// Row-major description of an instance, the input to [`Instance::new`].
#[derive(Debug, Clone, Default)]
pub struct InstanceParts {
    pub test_names: Vec<String>,
    pub arities: Vec<u8>,
    pub rows: Vec<Vec<u8>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub weights: Vec<u64>,
    pub costs: Vec<u32>,
    pub theta_units: u64,
}

impl InstanceParts {
    /// Binary tests named `t0, t1, ...`, classes `c0, c1, ...`, unit costs, θ = 0.
    pub fn binary(rows: Vec<Vec<u8>>, labels: Vec<usize>, weights: Vec<u64>) -> Self {
        let m = rows.first().map_or(0, Vec::len);
        let l = labels.iter().copied().max().map_or(1, |c| c + 1).max(1);
        InstanceParts {
            test_names: (0..m).map(|t| format!("t{t}")).collect(),
            arities: vec![2; m],
            rows,
            labels,
            class_names: (0..l).map(|c| format!("c{c}")).collect(),
            weights,
            costs: vec![1; m],
            theta_units: 0,
        }
    }

    pub fn costs(mut self, costs: Vec<u32>) -> Self {
        self.costs = costs;
        self
    }

    pub fn theta_units(mut self, units: u64) -> Self {
        self.theta_units = units;
        self
    }

    pub fn build(self) -> Result<Instance> {
        Instance::new(self)
    }
}

impl Instance {
    pub fn new(parts: InstanceParts) -> Result<Self> {
        let InstanceParts {
            test_names,
            arities,
            rows,
            labels,
            class_names,
            weights,
            costs,
            theta_units,
        } = parts;
        let n = rows.len();
        let m = test_names.len();
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if n == 0 {
            return Err(Error::Empty("instance has no objects"));
        }
        if arities.len() != m || costs.len() != m {
            return bad(format!(
                "{m} tests but {} arities and {} costs",
                arities.len(),
                costs.len()
            ));
        }
        if labels.len() != n || weights.len() != n {
            return bad(format!(
                "{n} objects but {} labels and {} weights",
                labels.len(),
                weights.len()
            ));
        }
        if class_names.is_empty() {
            return bad("no classes".into());
        }
        if let Some(c) = labels.iter().find(|&&c| c >= class_names.len()) {
            return bad(format!("label {c} out of range"));
        }
        if weights.contains(&0) {
            return bad("object with zero probability".into());
        }
        if costs.contains(&0) {
            return bad("test cost must be at least 1".into());
        }
        if arities.contains(&0) {
            return bad("test arity must be at least 1".into());
        }
        let mut columns = vec![Vec::with_capacity(n); m];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return bad(format!("row {i} has {} outcomes, expected {m}", row.len()));
            }
            for (t, &v) in row.iter().enumerate() {
                if v >= arities[t] {
                    return bad(format!(
                        "row {i}, test {t}: outcome {v} >= arity {}",
                        arities[t]
                    ));
                }
                columns[t].push(v);
            }
        }
        let total_weight: u64 = weights.iter().sum();
        if theta_units > total_weight {
            return bad(format!(
                "threshold {theta_units} exceeds total weight {total_weight}"
            ));
        }
        Ok(Instance {
            test_names,
            arities,
            columns,
            labels,
            class_names,
            weights,
            total_weight,
            costs,
            theta_units,
        })
    }

    #[inline]
    pub fn n_objects(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn n_tests(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    #[inline]
    pub fn outcome(&self, test: usize, object: usize) -> u8 {
        self.columns[test][object]
    }

    #[inline]
    pub fn column(&self, test: usize) -> &[u8] {
        &self.columns[test]
    }

    pub fn row(&self, object: usize) -> Vec<u8> {
        self.columns.iter().map(|c| c[object]).collect()
    }

    #[inline]
    pub fn arity(&self, test: usize) -> u8 {
        self.arities[test]
    }

    pub fn arities(&self) -> &[u8] {
        &self.arities
    }

    #[inline]
    pub fn label(&self, object: usize) -> usize {
        self.labels[object]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn weight(&self, object: usize) -> u64 {
        self.weights[object]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// Common denominator of all probabilities.
    #[inline]
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn probability(&self, object: usize) -> f64 {
        self.weights[object] as f64 / self.total_weight as f64
    }

    /// Minimum object probability δ.
    pub fn delta(&self) -> f64 {
        let min = self.weights.iter().copied().min().unwrap_or(1);
        min as f64 / self.total_weight as f64
    }

    #[inline]
    pub fn cost(&self, test: usize) -> u32 {
        self.costs[test]
    }

    pub fn costs(&self) -> &[u32] {
        &self.costs
    }

    /// Threshold θ in multiplicity units.
    #[inline]
    pub fn theta_units(&self) -> u64 {
        self.theta_units
    }

    pub fn theta(&self) -> f64 {
        self.theta_units as f64 / self.total_weight as f64
    }

    pub fn test_names(&self) -> &[String] {
        &self.test_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Replaces the cost vector.
    pub fn with_costs(mut self, costs: Vec<u32>) -> Result<Self> {
        if costs.len() != self.n_tests() || costs.contains(&0) {
            return Err(Error::InvalidInstance(
                "cost vector must have one entry >= 1 per test".into(),
            ));
        }
        self.costs = costs;
        Ok(self)
    }

    pub fn with_theta_units(mut self, units: u64) -> Result<Self> {
        if units > self.total_weight {
            return Err(Error::InvalidInstance(
                "threshold exceeds total weight".into(),
            ));
        }
        self.theta_units = units;
        Ok(self)
    }

    /// Class masses (multiplicities) over the whole instance.
    pub fn class_weights(&self) -> Vec<u64> {
        let mut out = vec![0; self.n_classes()];
        for (c, w) in self.labels.iter().zip(&self.weights) {
            out[*c] += w;
        }
        out
    }

    /// No two distinct objects share every test outcome.
    pub fn is_realizable(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.n_objects());
        (0..self.n_objects()).all(|i| seen.insert(self.row(i)))
    }
}

/// Heterogeneous-pair count from per-class multiplicities:
/// `(W² - Σ_c w_c²) / 2`.
#[inline]
pub fn pair_count(class_weights: &[u64]) -> u128 {
    let total: u128 = class_weights.iter().map(|&w| w as u128).sum();
    let sq: u128 = class_weights
        .iter()
        .map(|&w| (w as u128) * (w as u128))
        .sum();
    (total * total - sq) / 2
}
