//! Synthetic instances for benchmarking induction and pruning.

use cdt_core::dataset::coalesce;
use cdt_core::{Instance, InstanceParts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Knobs for [`synthetic`].
#[derive(Debug, Clone, Copy)]
pub struct Synthetic {
    pub rows: usize,
    pub tests: usize,
    pub classes: usize,
    /// Label depends on this many leading tests; the rest are noise.
    pub informative: usize,
    /// Chance a label is replaced by a uniform draw.
    pub noise: f64,
    pub random_costs: bool,
    pub theta_units: u64,
}

impl Synthetic {
    pub fn new(rows: usize, tests: usize) -> Self {
        Synthetic {
            rows,
            tests,
            classes: 2,
            informative: 4.min(tests),
            noise: 0.1,
            random_costs: false,
            theta_units: 0,
        }
    }
}

/// Rows of random binary tests, coalesced into an instance. The clean label
/// is the informative bits read as a number, modulo the class count.
pub fn synthetic(spec: &Synthetic, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(spec.rows);
    let mut labels = Vec::with_capacity(spec.rows);
    for _ in 0..spec.rows {
        let row: Vec<u8> = (0..spec.tests).map(|_| rng.gen_range(0..2)).collect();
        let clean = row[..spec.informative]
            .iter()
            .fold(0usize, |a, &b| a * 2 + b as usize)
            % spec.classes;
        labels.push(if rng.gen_bool(spec.noise) {
            rng.gen_range(0..spec.classes)
        } else {
            clean
        });
        rows.push(row);
    }
    let c = coalesce(&rows, &labels, &vec![1; rows.len()], spec.classes).expect("non-empty rows");
    let costs = if spec.random_costs {
        (0..spec.tests).map(|_| rng.gen_range(1..=10)).collect()
    } else {
        vec![1; spec.tests]
    };
    let mut parts = InstanceParts::binary(c.rows, c.labels, c.weights).costs(costs);
    parts.class_names = (0..spec.classes).map(|k| format!("c{k}")).collect();
    let total = spec.rows as u64;
    parts
        .theta_units(spec.theta_units.min(total))
        .build()
        .expect("synthetic instance is valid")
}
