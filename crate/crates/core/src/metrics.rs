//! Tree evaluation: ROC AUC, expected cost and height, λ tuning.

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::EvalSet;
use crate::error::Result;
use crate::impurity::ImpurityKind;
use crate::inducer::{induce, GreedyConfig};
use crate::instance::Instance;
use crate::tree::TreeModel;

/// Relative validation AUC drop that ends the λ walk.
pub const LAMBDA_DROP: f64 = 0.01;

/// `2^6, 2^5, ..., 2^-6`.
pub fn lambda_grid() -> Vec<f64> {
    (-6..=6).rev().map(|e| 2f64.powi(e)).collect()
}

/// Mann-Whitney AUC with half credit for ties. `None` unless both classes
/// are present.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positive.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block gets the average
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Binary problems score class 1; otherwise macro one-vs-rest over the
/// classes that occur with at least one negative.
pub fn roc_auc(probas: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Option<f64> {
    if n_classes == 2 {
        let scores: Vec<f64> = probas.iter().map(|p| p[1]).collect();
        let pos: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        return binary_auc(&scores, &pos);
    }
    let mut total = 0.0;
    let mut count = 0;
    for c in 0..n_classes {
        let scores: Vec<f64> = probas.iter().map(|p| p[c]).collect();
        let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        if let Some(a) = binary_auc(&scores, &pos) {
            total += a;
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}

pub fn tree_auc(tree: &TreeModel, data: &EvalSet) -> Option<f64> {
    let probas: Vec<Vec<f64>> = data.rows.iter().map(|r| tree.predict_proba(r)).collect();
    roc_auc(&probas, &data.labels, tree.class_names.len())
}

/// Σ p(x)·(costs along x's path), walking every object of the instance.
pub fn expected_cost(tree: &TreeModel, inst: &Instance) -> f64 {
    path_sum(tree, inst, |t| inst.cost(t) as u128)
}

/// Expected number of tests on a path.
pub fn expected_height(tree: &TreeModel, inst: &Instance) -> f64 {
    path_sum(tree, inst, |_| 1)
}

fn path_sum(tree: &TreeModel, inst: &Instance, cost: impl Fn(usize) -> u128) -> f64 {
    let mut total: u128 = 0;
    let mut fallbacks = 0;
    for i in 0..inst.n_objects() {
        let route = tree.route(&inst.row(i));
        fallbacks += route.fallbacks;
        let path: u128 = route.tests.iter().map(|&t| cost(t)).sum();
        total += path * inst.weight(i) as u128;
    }
    if fallbacks > 0 {
        warn!("{fallbacks} outcomes had no branch and were routed to the heaviest child");
    }
    total as f64 / inst.total_weight() as f64
}

/// The same quantity from the tree alone: Σ over internal nodes of
/// cost(test)·p(node).
pub fn expected_cost_by_nodes(tree: &TreeModel, costs: &[u32]) -> f64 {
    let total: u128 = tree
        .preorder()
        .into_iter()
        .filter_map(|id| {
            tree.node(id)
                .test()
                .map(|t| costs[t] as u128 * tree.node(id).weight as u128)
        })
        .sum();
    total as f64 / tree.total_weight as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub auc: Option<f64>,
    pub expected_cost: f64,
    pub expected_height: f64,
    pub tree_size: usize,
}

/// Cost and height on the training distribution, AUC on `data`.
pub fn evaluate(tree: &TreeModel, inst: &Instance, data: &EvalSet) -> Evaluation {
    Evaluation {
        auc: tree_auc(tree, data),
        expected_cost: expected_cost(tree, inst),
        expected_height: expected_height(tree, inst),
        tree_size: tree.size(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub tag: String,
    pub cost_mode: String,
    pub seed: u64,
    pub auc: Option<f64>,
    pub expected_cost: f64,
    pub expected_height: f64,
    pub tree_size: usize,
    pub wall_ms: u64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub auc: Option<f64>,
    pub expected_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTuning {
    pub lambda: f64,
    pub trace: Vec<LambdaPoint>,
}

/// Walks λ down the grid and keeps the last value before validation AUC
/// drops more than 1% below the best seen so far. Every grid point is
/// trained so the whole trace is reported.
pub fn tune_lambda(
    inst: &Instance,
    impurity: ImpurityKind,
    validation: &EvalSet,
) -> Result<LambdaTuning> {
    let trace: Vec<LambdaPoint> = lambda_grid()
        .into_par_iter()
        .map(|lambda| {
            let tree = induce(inst, &GreedyConfig::enhanced(lambda, impurity))?;
            Ok(LambdaPoint {
                lambda,
                auc: tree_auc(&tree, validation),
                expected_cost: expected_cost(&tree, inst),
            })
        })
        .collect::<Result<_>>()?;
    let lambda = choose_lambda(&trace);
    debug!("tuned lambda {lambda}");
    Ok(LambdaTuning { lambda, trace })
}

/// Stopping rule over a trace ordered from large to small λ.
pub fn choose_lambda(trace: &[LambdaPoint]) -> f64 {
    let mut chosen = trace[0].lambda;
    let mut best: Option<f64> = None;
    for p in trace {
        if let (Some(a), Some(b)) = (p.auc, best) {
            if a < b * (1.0 - LAMBDA_DROP) {
                break;
            }
        }
        chosen = p.lambda;
        if let Some(a) = p.auc {
            best = Some(best.map_or(a, |b| b.max(a)));
        }
    }
    chosen
}
