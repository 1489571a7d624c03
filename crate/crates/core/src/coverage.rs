//! Per-object coverage functions used by the efficiency term.
//!
//! For object `x_i` and a set `S` of tests on its root path, the node it has
//! reached, `N_S^(i)`, is simply the current tree node. All functions are
//! therefore evaluated from node-level statistics (mass and heterogeneous
//! pair count) plus the object's own mass:
//!
//! * `f^P_i  = (1 - p(N)) / (1 - p(x_i))`
//! * `f̄^P_i  = min{(1 - p(N)) / (1 - max{p(x_i), θ}), 1}`
//! * `f^H_i  = (P(X) - P(N)) / P(X)`
//! * `f^OR_i = 1 - (1 - f̄^P_i)(1 - f^H_i)`
//!
//! Internally we work with the *remaining* fractions `1 - f`, which are
//! ratios of integers and keep the normalized gains well conditioned.

use crate::instance::{pair_count, Instance};

/// Mass and heterogeneous-pair count of a node, in multiplicity units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeStats {
    pub weight: u64,
    pub pairs: u128,
}

/// The set of objects at a tree node together with cached statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub objects: Vec<u32>,
    pub weight: u64,
    pub class_weights: Vec<u64>,
    pub pairs: u128,
    /// Tests used on the path from the root, `S`.
    pub used: Vec<bool>,
    pub depth: usize,
}

impl NodeState {
    pub fn root(inst: &Instance) -> Self {
        let objects = (0..inst.n_objects() as u32).collect();
        Self::from_objects(inst, objects, vec![false; inst.n_tests()], 0)
    }

    pub fn from_objects(inst: &Instance, objects: Vec<u32>, used: Vec<bool>, depth: usize) -> Self {
        let mut class_weights = vec![0u64; inst.n_classes()];
        for &i in &objects {
            class_weights[inst.label(i as usize)] += inst.weight(i as usize);
        }
        let weight = class_weights.iter().sum();
        let pairs = pair_count(&class_weights);
        NodeState {
            objects,
            weight,
            class_weights,
            pairs,
            used,
            depth,
        }
    }

    #[inline]
    pub fn stats(&self) -> NodeStats {
        NodeStats {
            weight: self.weight,
            pairs: self.pairs,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.pairs == 0
    }

    /// Leaf condition: homogeneous or `p(N) <= θ`.
    pub fn stops(&self, inst: &Instance) -> bool {
        self.pairs == 0 || self.weight <= inst.theta_units()
    }

    /// Majority class, ties broken towards the smallest class index.
    pub fn majority_class(&self) -> usize {
        majority(&self.class_weights)
    }

    /// Nonempty children under `test`, in ascending outcome order.
    pub fn partition(&self, inst: &Instance, test: usize) -> Vec<(u8, NodeState)> {
        let col = inst.column(test);
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); inst.arity(test) as usize];
        for &i in &self.objects {
            buckets[col[i as usize] as usize].push(i);
        }
        let mut used = self.used.clone();
        used[test] = true;
        buckets
            .into_iter()
            .enumerate()
            .filter(|(_, b)| !b.is_empty())
            .map(|(v, b)| {
                (
                    v as u8,
                    NodeState::from_objects(inst, b, used.clone(), self.depth + 1),
                )
            })
            .collect()
    }
}

pub(crate) fn majority(class_weights: &[u64]) -> usize {
    let mut best = 0;
    for (c, &w) in class_weights.iter().enumerate() {
        if w > class_weights[best] {
            best = c;
        }
    }
    best
}

/// Instance-wide constants shared by every coverage function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageContext {
    pub total_weight: u64,
    pub theta_units: u64,
    /// `P(X)`, heterogeneous pairs at the root.
    pub root_pairs: u128,
}

impl CoverageContext {
    pub fn new(inst: &Instance) -> Self {
        CoverageContext {
            total_weight: inst.total_weight(),
            theta_units: inst.theta_units(),
            root_pairs: pair_count(&inst.class_weights()),
        }
    }

    fn remaining_prob_with_floor(&self, floor: u64, node_weight: u64) -> f64 {
        if floor >= self.total_weight || node_weight <= floor {
            0.0
        } else {
            (node_weight - floor) as f64 / (self.total_weight - floor) as f64
        }
    }

    /// `1 - f̄^P_i`.
    #[inline]
    pub fn remaining_prob(&self, object_weight: u64, node_weight: u64) -> f64 {
        self.remaining_prob_with_floor(object_weight.max(self.theta_units), node_weight)
    }

    /// `1 - f^H_i`.
    #[inline]
    pub fn remaining_pairs(&self, node_pairs: u128) -> f64 {
        if self.root_pairs == 0 {
            0.0
        } else {
            node_pairs as f64 / self.root_pairs as f64
        }
    }

    /// `1 - f^OR_i`.
    #[inline]
    pub fn remaining(&self, object_weight: u64, node: NodeStats) -> f64 {
        self.remaining_prob(object_weight, node.weight) * self.remaining_pairs(node.pairs)
    }

    /// Untruncated `f^P_i`.
    pub fn f_prob(&self, object_weight: u64, node_weight: u64) -> f64 {
        1.0 - self.remaining_prob_with_floor(object_weight, node_weight)
    }

    /// Truncated `f̄^P_i`.
    pub fn f_prob_truncated(&self, object_weight: u64, node_weight: u64) -> f64 {
        1.0 - self.remaining_prob(object_weight, node_weight)
    }

    /// `f^H_i`; identically 1 when the instance has a single class.
    pub fn f_pairs(&self, node_pairs: u128) -> f64 {
        1.0 - self.remaining_pairs(node_pairs)
    }

    /// `f^OR_i`.
    pub fn f_or(&self, object_weight: u64, node: NodeStats) -> f64 {
        1.0 - self.remaining(object_weight, node)
    }

    /// Object is fully covered at this node.
    #[inline]
    pub fn is_covered(&self, object_weight: u64, node: NodeStats) -> bool {
        node.pairs == 0
            || self.root_pairs == 0
            || node.weight <= object_weight.max(self.theta_units)
            || object_weight.max(self.theta_units) >= self.total_weight
    }
}

/// Coverage values of one object at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectCoverage {
    pub object: u32,
    pub f_prob: f64,
    pub f_pairs: f64,
    pub f_or: f64,
}

/// Values of `f̄^P`, `f^H` and `f^OR` for every object of a node.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageState {
    pub context: CoverageContext,
    pub objects: Vec<ObjectCoverage>,
}

impl CoverageState {
    pub fn at(inst: &Instance, context: CoverageContext, node: &NodeState) -> Self {
        let stats = node.stats();
        let f_pairs = context.f_pairs(stats.pairs);
        let objects = node
            .objects
            .iter()
            .map(|&i| {
                let w = inst.weight(i as usize);
                ObjectCoverage {
                    object: i,
                    f_prob: context.f_prob_truncated(w, stats.weight),
                    f_pairs,
                    f_or: context.f_or(w, stats),
                }
            })
            .collect();
        CoverageState { context, objects }
    }
}

/// `f^OR_i(S ∪ {t}) - f^OR_i(S)` for object `i` of `node`.
pub fn marginal_gain(
    inst: &Instance,
    context: &CoverageContext,
    object: usize,
    node: &NodeState,
    test: usize,
) -> f64 {
    let value = inst.outcome(test, object);
    let mut child_classes = vec![0u64; inst.n_classes()];
    for &j in &node.objects {
        let j = j as usize;
        if inst.outcome(test, j) == value {
            child_classes[inst.label(j)] += inst.weight(j);
        }
    }
    let child = NodeStats {
        weight: child_classes.iter().sum(),
        pairs: pair_count(&child_classes),
    };
    let w = inst.weight(object);
    (context.remaining(w, node.stats()) - context.remaining(w, child)).max(0.0)
}

/// Objects of `inst` that agree with `object` on every test in `tests`.
pub(crate) fn path_node(
    inst: &Instance,
    object: usize,
    tests: impl Iterator<Item = usize> + Clone,
) -> NodeStats {
    let mut classes = vec![0u64; inst.n_classes()];
    for j in 0..inst.n_objects() {
        if tests
            .clone()
            .all(|t| inst.outcome(t, j) == inst.outcome(t, object))
        {
            classes[inst.label(j)] += inst.weight(j);
        }
    }
    NodeStats {
        weight: classes.iter().sum(),
        pairs: pair_count(&classes),
    }
}

/// Outcome of [`min_increment_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinIncrement {
    /// Smallest strictly positive `f^OR` increment seen, if any.
    pub observed: Option<f64>,
    /// Lower bound `u / P(X)`, `u` the probability unit `1 / W`. With unit
    /// multiplicities this is at least `δ / C(n, 2)`.
    pub bound: f64,
    pub holds: bool,
    /// Number of `(i, S, t)` triples enumerated.
    pub triples: usize,
}

/// Increments at or below this are treated as zero.
const POSITIVE_GAIN: f64 = 1e-15;

/// Enumerates all `(i, S, t)` with `t ∉ S` and reports the smallest positive
/// `f^OR` increment. Only meant for tiny instances (`n, m <= 8`).
pub fn min_increment_check(inst: &Instance) -> MinIncrement {
    let ctx = CoverageContext::new(inst);
    let m = inst.n_tests();
    assert!(
        m <= 16,
        "min_increment_check is exponential in the number of tests"
    );
    let mut observed: Option<f64> = None;
    let mut triples = 0;
    for i in 0..inst.n_objects() {
        let w = inst.weight(i);
        for set in 0u32..(1 << m) {
            let members = (0..m).filter(move |t| set >> t & 1 == 1);
            let here = path_node(inst, i, members.clone());
            let before = ctx.remaining(w, here);
            for t in (0..m).filter(|t| set >> t & 1 == 0) {
                triples += 1;
                let after = ctx.remaining(
                    w,
                    path_node(inst, i, members.clone().chain(std::iter::once(t))),
                );
                let gain = before - after;
                if gain > POSITIVE_GAIN {
                    observed = Some(observed.map_or(gain, |o: f64| o.min(gain)));
                }
            }
        }
    }
    let bound = if ctx.root_pairs == 0 {
        0.0
    } else {
        1.0 / (inst.total_weight() as f64 * ctx.root_pairs as f64)
    };
    let holds = observed.is_none_or(|o| o >= bound - 1e-12);
    MinIncrement {
        observed,
        bound,
        holds,
        triples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceParts;

    /// Four uniform objects, labels A A B B, test 0 separates {0,1} from {2,3},
    /// test 1 separates {0,2} from {1,3}.
    fn four() -> Instance {
        InstanceParts::binary(
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            vec![0, 0, 1, 1],
            vec![1, 1, 1, 1],
        )
        .build()
        .unwrap()
    }

    #[test]
    fn root_values_are_zero() {
        let inst = four();
        let ctx = CoverageContext::new(&inst);
        let root = NodeState::root(&inst);
        assert_eq!(ctx.f_prob_truncated(1, root.weight), 0.0);
        assert_eq!(ctx.f_pairs(root.pairs), 0.0);
        assert_eq!(ctx.f_or(1, root.stats()), 0.0);
    }

    #[test]
    fn f_prob_half_node() {
        let inst = four();
        let ctx = CoverageContext::new(&inst);
        // (1 - 0.5) / (1 - 0.25)
        assert!((ctx.f_prob_truncated(1, 2) - 2.0 / 3.0).abs() < 1e-15);
        // θ = 0.5 truncates to 1
        let ctx = CoverageContext::new(&inst.clone().with_theta_units(2).unwrap());
        assert_eq!(ctx.f_prob_truncated(1, 2), 1.0);
    }

    #[test]
    fn f_pairs_of_mixed_half() {
        let inst = four();
        let ctx = CoverageContext::new(&inst);
        assert_eq!(ctx.root_pairs, 4);
        // node {x0, x2}: one A, one B
        let node = NodeState::from_objects(&inst, vec![0, 2], vec![false, true], 1);
        assert_eq!(node.pairs, 1);
        assert!((ctx.f_pairs(node.pairs) - 0.75).abs() < 1e-15);
        let hom = NodeState::from_objects(&inst, vec![0, 1], vec![true, false], 1);
        assert_eq!(ctx.f_pairs(hom.pairs), 1.0);
    }

    #[test]
    fn f_or_disjunction() {
        let inst = four();
        let ctx = CoverageContext::new(&inst);
        let node = NodeState::from_objects(&inst, vec![0, 2], vec![false, true], 1);
        // 1 - (1/3)(1/4)
        assert!((ctx.f_or(1, node.stats()) - 11.0 / 12.0).abs() < 1e-15);
        let hom = NodeState::from_objects(&inst, vec![0, 1], vec![true, false], 1);
        assert_eq!(ctx.f_or(1, hom.stats()), 1.0);
    }

    #[test]
    fn marginal_gain_cases() {
        let inst = four();
        let ctx = CoverageContext::new(&inst);
        let root = NodeState::root(&inst);
        // test 1 gives x0 the node {x0, x2}
        let g = marginal_gain(&inst, &ctx, 0, &root, 1);
        assert!((g - 11.0 / 12.0).abs() < 1e-15);
        // test 0 gives x0 the homogeneous node {x0, x1}
        let g = marginal_gain(&inst, &ctx, 0, &root, 0);
        assert!((g - 1.0).abs() < 1e-15);
        // constant test
        let c = InstanceParts::binary(vec![vec![0, 0], vec![0, 1]], vec![0, 1], vec![1, 1])
            .build()
            .unwrap();
        let cctx = CoverageContext::new(&c);
        assert_eq!(marginal_gain(&c, &cctx, 0, &NodeState::root(&c), 0), 0.0);
    }

    #[test]
    fn single_object_universe_is_covered() {
        let inst = InstanceParts::binary(vec![vec![0]], vec![0], vec![3])
            .build()
            .unwrap();
        let ctx = CoverageContext::new(&inst);
        assert_eq!(ctx.f_prob_truncated(3, 3), 1.0);
        assert_eq!(
            ctx.f_or(
                3,
                NodeStats {
                    weight: 3,
                    pairs: 0
                }
            ),
            1.0
        );
    }

    #[test]
    fn min_increment_uniform_four() {
        let inst = four();
        let r = min_increment_check(&inst);
        assert!(r.holds);
        let delta = inst.delta();
        assert!(r.observed.unwrap() >= delta / 6.0);
    }

    #[test]
    fn min_increment_single_class() {
        let inst = InstanceParts::binary(vec![vec![0], vec![1]], vec![0, 0], vec![1, 1])
            .build()
            .unwrap();
        let r = min_increment_check(&inst);
        // f^H saturated everywhere, so f^OR is identically 1
        assert_eq!(r.observed, None);
        assert!(r.holds);
    }

    #[test]
    fn coverage_state_matches_termination() {
        let inst = four().with_theta_units(2).unwrap();
        let ctx = CoverageContext::new(&inst);
        let node = NodeState::from_objects(&inst, vec![0, 2], vec![false, true], 1);
        assert!(node.stops(&inst));
        let state = CoverageState::at(&inst, ctx, &node);
        assert!(state.objects.iter().all(|o| o.f_or == 1.0));
    }
}
