//! Exhaustive ground truth on tiny instances: optimal trees, submodularity
//! audits, greedy/optimal ratio sweeps, and brute-force pruning optima.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{majority, path_node, CoverageContext, NodeStats};
use crate::error::{Error, Result};
use crate::impurity::ImpurityKind;
use crate::inducer::{induce, GreedyConfig};
use crate::instance::{pair_count, Instance, InstanceParts};
use crate::metrics::expected_cost;
use crate::pruner::node_risk;
use crate::tree::{Branch, NodeKind, TreeModel, TreeNode, MODEL_FORMAT_VERSION};

pub const MAX_OBJECTS: usize = 8;
pub const MAX_TESTS: usize = 8;
pub const AUDIT_TOLERANCE: f64 = 1e-12;

/// An instance small enough for exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance(Instance);

impl TinyInstance {
    pub fn new(inst: Instance) -> Result<Self> {
        let (n, m) = (inst.n_objects(), inst.n_tests());
        if n > MAX_OBJECTS || m > MAX_TESTS || inst.arities().iter().any(|&a| a != 2) {
            return Err(Error::CapExceeded { n, m });
        }
        Ok(TinyInstance(inst))
    }

    pub fn instance(&self) -> &Instance {
        &self.0
    }

    pub fn into_instance(self) -> Instance {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinySpec {
    pub max_objects: usize,
    pub max_tests: usize,
    pub max_classes: usize,
    pub max_weight: u64,
    pub max_cost: u32,
    /// Draw a positive θ for roughly half the instances.
    pub random_theta: bool,
}

impl Default for TinySpec {
    fn default() -> Self {
        TinySpec {
            max_objects: 6,
            max_tests: 6,
            max_classes: 3,
            max_weight: 4,
            max_cost: 3,
            random_theta: true,
        }
    }
}

/// Random realizable tiny instance: distinct binary rows, random labels,
/// multiplicities, costs and threshold.
pub fn random_tiny(rng: &mut impl Rng, spec: &TinySpec) -> TinyInstance {
    let m = rng.gen_range(1..=spec.max_tests.min(MAX_TESTS));
    let n_max = spec.max_objects.min(MAX_OBJECTS).min(1 << m);
    let n = rng.gen_range(1..=n_max);
    let mut codes: Vec<u32> = (0..1u32 << m).collect();
    codes.shuffle(rng);
    let rows: Vec<Vec<u8>> = codes[..n]
        .iter()
        .map(|&c| (0..m).map(|t| ((c >> t) & 1) as u8).collect())
        .collect();
    let l = rng.gen_range(2..=spec.max_classes.max(2));
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..l)).collect();
    let weights: Vec<u64> = (0..n)
        .map(|_| rng.gen_range(1..=spec.max_weight.max(1)))
        .collect();
    let costs: Vec<u32> = (0..m)
        .map(|_| rng.gen_range(1..=spec.max_cost.max(1)))
        .collect();
    let total: u64 = weights.iter().sum();
    let theta = if spec.random_theta && rng.gen_bool(0.5) {
        rng.gen_range(0..=total / 2)
    } else {
        0
    };
    let mut parts = InstanceParts::binary(rows, labels, weights)
        .costs(costs)
        .theta_units(theta);
    parts.class_names = (0..l).map(|c| format!("c{c}")).collect();
    TinyInstance::new(parts.build().expect("generated instance is valid")).expect("within caps")
}

fn mask_classes(inst: &Instance, mask: u32) -> Vec<u64> {
    let mut cw = vec![0u64; inst.n_classes()];
    for i in 0..inst.n_objects() {
        if mask >> i & 1 == 1 {
            cw[inst.label(i)] += inst.weight(i);
        }
    }
    cw
}

fn mask_stops(inst: &Instance, mask: u32) -> bool {
    let cw = mask_classes(inst, mask);
    pair_count(&cw) == 0 || cw.iter().sum::<u64>() <= inst.theta_units()
}

/// Children of `mask` under `test`, by outcome; empty parts dropped.
fn mask_split(inst: &Instance, mask: u32, test: usize) -> Vec<(u8, u32)> {
    let mut parts = [0u32; 2];
    for i in 0..inst.n_objects() {
        if mask >> i & 1 == 1 {
            parts[inst.outcome(test, i) as usize] |= 1 << i;
        }
    }
    (0..2u8).zip(parts).filter(|&(_, p)| p != 0).collect()
}

fn mask_weight(inst: &Instance, mask: u32) -> u64 {
    (0..inst.n_objects())
        .filter(|&i| mask >> i & 1 == 1)
        .map(|i| inst.weight(i))
        .sum()
}

struct Solver<'a> {
    inst: &'a Instance,
    memo: HashMap<u32, (u128, Option<usize>)>,
}

impl Solver<'_> {
    /// Minimum of Σ w(x)·pathcost(x) over trees for the objects in `mask`.
    fn solve(&mut self, mask: u32) -> u128 {
        if let Some(&(v, _)) = self.memo.get(&mask) {
            return v;
        }
        let mut best = (0u128, None);
        if !mask_stops(self.inst, mask) {
            let w = mask_weight(self.inst, mask) as u128;
            let mut best_cost = u128::MAX;
            let mut best_test = None;
            for t in 0..self.inst.n_tests() {
                let kids = mask_split(self.inst, mask, t);
                if kids.len() < 2 {
                    continue;
                }
                let mut c = self.inst.cost(t) as u128 * w;
                for (_, k) in kids {
                    c += self.solve(k);
                }
                if c < best_cost {
                    best_cost = c;
                    best_test = Some(t);
                }
            }
            // an inseparable node is a leaf, as in the greedy inducer
            if best_test.is_some() {
                best = (best_cost, best_test);
            }
        }
        self.memo.insert(mask, best);
        best.0
    }

    fn build(&self, mask: u32, depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let cw = mask_classes(self.inst, mask);
        let id = nodes.len();
        nodes.push(TreeNode {
            depth,
            weight: cw.iter().sum(),
            objects: mask.count_ones() as usize,
            label: majority(&cw),
            class_weights: cw,
            kind: NodeKind::Leaf,
        });
        if let Some(t) = self.memo[&mask].1 {
            let mut children = Vec::new();
            for (v, k) in mask_split(self.inst, mask, t) {
                let child = self.build(k, depth + 1, nodes);
                children.push(Branch {
                    value: v,
                    node: child,
                });
            }
            nodes[id].kind = NodeKind::Internal { test: t, children };
        }
        id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub tree: TreeModel,
    pub expected_cost: f64,
}

/// Exact minimum-expected-cost tree, memoized on the object subset.
pub fn optimal_tree(tiny: &TinyInstance) -> Optimum {
    let inst = tiny.instance();
    let full = (1u32 << inst.n_objects()) - 1;
    let mut solver = Solver {
        inst,
        memo: HashMap::new(),
    };
    let total = solver.solve(full);
    let mut nodes = Vec::new();
    solver.build(full, 0, &mut nodes);
    Optimum {
        tree: TreeModel {
            format_version: MODEL_FORMAT_VERSION,
            test_names: inst.test_names().to_vec(),
            class_names: inst.class_names().to_vec(),
            total_weight: inst.total_weight(),
            root: 0,
            nodes,
        },
        expected_cost: total as f64 / inst.total_weight() as f64,
    }
}

/// Independent solver: plain recursion over (subset, used tests) with no
/// memo, trying every unused test including useless ones.
pub fn optimal_cost_unmemoized(tiny: &TinyInstance) -> f64 {
    fn go(inst: &Instance, mask: u32, used: u32) -> Option<u128> {
        if mask_stops(inst, mask) {
            return Some(0);
        }
        let w = mask_weight(inst, mask) as u128;
        let mut best: Option<u128> = None;
        for t in 0..inst.n_tests() {
            if used >> t & 1 == 1 {
                continue;
            }
            let mut c = inst.cost(t) as u128 * w;
            let mut ok = true;
            for (_, k) in mask_split(inst, mask, t) {
                match go(inst, k, used | 1 << t) {
                    Some(v) => c += v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && best.is_none_or(|b| c < b) {
                best = Some(c);
            }
        }
        // nothing separates the node: it stays a leaf
        Some(best.unwrap_or(0))
    }
    let inst = tiny.instance();
    let full = (1u32 << inst.n_objects()) - 1;
    go(inst, full, 0).unwrap_or(0) as f64 / inst.total_weight() as f64
}

/// Which property an audit found violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    Monotonicity,
    DiminishingReturns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub function: String,
    pub object: usize,
    pub violation: Violation,
    /// Tests performed, as bitmasks over test indices.
    pub set: u32,
    pub superset: u32,
    pub test: usize,
    /// Marginal gain on `set` and on `superset` (equal sets for monotonicity).
    pub gain_small: f64,
    pub gain_large: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub passed: bool,
    pub checks: usize,
    pub counterexample: Option<Counterexample>,
}

/// A per-object set function evaluated through the node reached after a set
/// of tests: `f(context, object weight, node)`.
pub type CoverageFn = fn(&CoverageContext, u64, NodeStats) -> f64;

pub fn standard_functions() -> Vec<(&'static str, CoverageFn)> {
    vec![
        ("f_p", |c, w, n| c.f_prob(w, n.weight)),
        ("f_p_truncated", |c, w, n| c.f_prob_truncated(w, n.weight)),
        ("f_h", |c, _, n| c.f_pairs(n.pairs)),
        ("f_or", |c, w, n| c.f_or(w, n)),
    ]
}

pub fn submodularity_audit(tiny: &TinyInstance) -> AuditReport {
    submodularity_audit_with(tiny, &standard_functions())
}

/// Exhaustive monotonicity and diminishing-returns check of each function
/// for each object, over all `S ⊆ S' ⊆ T` and `t ∉ S'`.
pub fn submodularity_audit_with(
    tiny: &TinyInstance,
    functions: &[(&str, CoverageFn)],
) -> AuditReport {
    let inst = tiny.instance();
    let ctx = CoverageContext::new(inst);
    let m = inst.n_tests();
    let subsets = 1u32 << m;
    let mut checks = 0;
    for i in 0..inst.n_objects() {
        let nodes: Vec<NodeStats> = (0..subsets)
            .map(|s| path_node(inst, i, (0..m).filter(move |t| s >> t & 1 == 1)))
            .collect();
        let w = inst.weight(i);
        for &(name, f) in functions {
            let value: Vec<f64> = nodes.iter().map(|&n| f(&ctx, w, n)).collect();
            let fail =
                |checks, violation, set, superset, test, gain_small, gain_large| AuditReport {
                    passed: false,
                    checks,
                    counterexample: Some(Counterexample {
                        function: name.to_string(),
                        object: i,
                        violation,
                        set,
                        superset,
                        test,
                        gain_small,
                        gain_large,
                    }),
                };
            for s in 0..subsets {
                for t in (0..m).filter(|t| s >> t & 1 == 0) {
                    checks += 1;
                    let gain = value[(s | 1 << t) as usize] - value[s as usize];
                    if gain < -AUDIT_TOLERANCE {
                        return fail(checks, Violation::Monotonicity, s, s, t, gain, gain);
                    }
                }
                // supersets of s that exclude nothing in s
                let mut sup = s;
                loop {
                    for t in (0..m).filter(|t| sup >> t & 1 == 0) {
                        checks += 1;
                        let small = value[(s | 1 << t) as usize] - value[s as usize];
                        let large = value[(sup | 1 << t) as usize] - value[sup as usize];
                        if large > small + AUDIT_TOLERANCE {
                            return fail(
                                checks,
                                Violation::DiminishingReturns,
                                s,
                                sup,
                                t,
                                small,
                                large,
                            );
                        }
                    }
                    if sup == subsets - 1 {
                        break;
                    }
                    sup = (sup + 1) | s;
                }
            }
        }
    }
    AuditReport {
        passed: true,
        checks,
        counterexample: None,
    }
}

/// Looser of the two approximation constants: `300(1 + log2 1/δ + log2 n +
/// λγ)` and `20 F` with `F = 15(1 + ln 1/ε + log2 n + λγ)`.
pub fn ratio_bound(inst: &Instance, lambda: f64, kind: ImpurityKind) -> f64 {
    let n = inst.n_objects() as f64;
    let delta = inst.delta();
    let gamma = kind.gamma_bound(delta);
    let root_pairs = pair_count(&inst.class_weights());
    let epsilon = if root_pairs == 0 {
        1.0
    } else {
        1.0 / (inst.total_weight() as f64 * root_pairs as f64)
    };
    let a = 300.0 * (1.0 + (1.0 / delta).log2() + n.log2() + lambda * gamma);
    let f = 15.0 * (1.0 + (1.0 / epsilon).ln() + n.log2() + lambda * gamma);
    a.max(20.0 * f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub instance_seed: u64,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub greedy_cost: f64,
    pub optimal_cost: f64,
    pub ratio: f64,
    pub bound: f64,
}

impl SweepRow {
    pub fn within_bound(&self) -> bool {
        self.ratio >= 1.0 - 1e-9 && self.ratio <= self.bound
    }
}

/// Greedy-to-optimal expected cost ratios on `count` random tiny instances,
/// instance `k` drawn from seed `seed + k`.
pub fn approx_ratio_sweep(
    seed: u64,
    count: usize,
    lambdas: &[f64],
    spec: &TinySpec,
) -> Result<Vec<SweepRow>> {
    let kind = ImpurityKind::Entropy;
    let rows: Vec<Vec<SweepRow>> = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let instance_seed = seed.wrapping_add(k);
            let tiny = random_tiny(&mut ChaCha8Rng::seed_from_u64(instance_seed), spec);
            let inst = tiny.instance();
            let opt = optimal_tree(&tiny).expected_cost;
            lambdas
                .iter()
                .map(|&lambda| {
                    let tree = induce(inst, &GreedyConfig::enhanced(lambda, kind))?;
                    let greedy = expected_cost(&tree, inst);
                    let ratio = if opt == 0.0 {
                        if greedy == 0.0 {
                            1.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        greedy / opt
                    };
                    Ok(SweepRow {
                        instance_seed,
                        n: inst.n_objects(),
                        m: inst.n_tests(),
                        lambda,
                        greedy_cost: greedy,
                        optimal_cost: opt,
                        ratio,
                        bound: ratio_bound(inst, lambda, kind),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Random tree with at most `max_leaves` leaves and random leaf class
/// weights, for pruning checks. Internal nodes at depth `d` use test `d`.
pub fn random_tree(rng: &mut impl Rng, max_leaves: usize, n_classes: usize) -> TreeModel {
    let target = rng.gen_range(1..=max_leaves.max(1));
    // shape: parent of each node, grown by splitting random leaves
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut depth = vec![0usize];
    let mut leaves = vec![0usize];
    while leaves.len() < target {
        let pick = rng.gen_range(0..leaves.len());
        let id = leaves.swap_remove(pick);
        for _ in 0..2 {
            let c = children.len();
            children.push(Vec::new());
            depth.push(depth[id] + 1);
            children[id].push(c);
            leaves.push(c);
        }
    }
    let n = children.len();
    let mut cw = vec![vec![0u64; n_classes]; n];
    for id in (0..n).rev() {
        if children[id].is_empty() {
            loop {
                for w in cw[id].iter_mut() {
                    *w = rng.gen_range(0..=6);
                }
                if cw[id].iter().sum::<u64>() > 0 {
                    break;
                }
            }
        } else {
            // children always have larger ids
            let sum: Vec<u64> = (0..n_classes)
                .map(|c| children[id].iter().map(|&k| cw[k][c]).sum())
                .collect();
            cw[id] = sum;
        }
    }
    let max_depth = depth.iter().copied().max().unwrap_or(0);
    let mut nodes = Vec::with_capacity(n);
    for id in 0..n {
        let weight = cw[id].iter().sum();
        nodes.push(TreeNode {
            depth: depth[id],
            weight,
            objects: weight as usize,
            label: majority(&cw[id]),
            class_weights: cw[id].clone(),
            kind: if children[id].is_empty() {
                NodeKind::Leaf
            } else {
                NodeKind::Internal {
                    test: depth[id],
                    children: children[id]
                        .iter()
                        .enumerate()
                        .map(|(v, &c)| Branch {
                            value: v as u8,
                            node: c,
                        })
                        .collect(),
                }
            },
        });
    }
    TreeModel {
        format_version: MODEL_FORMAT_VERSION,
        test_names: (0..=max_depth).map(|d| format!("t{d}")).collect(),
        class_names: (0..n_classes).map(|c| format!("c{c}")).collect(),
        total_weight: cw[0].iter().sum(),
        root: 0,
        nodes,
    }
}

/// `min R(T') + α·leaves(T')` over every pruned subtree `T'`, by listing
/// all of them.
pub fn min_cost_complexity(tree: &TreeModel, kind: ImpurityKind, alpha: f64) -> f64 {
    fn options(tree: &TreeModel, id: usize, kind: ImpurityKind) -> Vec<(f64, usize)> {
        let mut out = vec![(node_risk(tree, id, kind), 1)];
        let kids = tree.node(id).children();
        if kids.is_empty() {
            return out;
        }
        let mut combos: Vec<(f64, usize)> = vec![(0.0, 0)];
        for b in kids {
            let sub = options(tree, b.node, kind);
            combos = combos
                .iter()
                .flat_map(|&(r, l)| sub.iter().map(move |&(sr, sl)| (r + sr, l + sl)))
                .collect();
        }
        out.extend(combos);
        out
    }
    options(tree, tree.root, kind)
        .into_iter()
        .map(|(r, l)| r + alpha * l as f64)
        .fold(f64::INFINITY, f64::min)
}
