//! Top-down tree induction.
//!
//! Every algorithm shares the stopping rule (homogeneous, or `p(N) <= θ`)
//! and the tie rule (lowest test index wins). They differ only in how a
//! candidate test is scored at a node.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{CoverageContext, NodeState, NodeStats};
use crate::error::{Error, Result};
use crate::impurity::{clamp_reduction, impurity_of, ImpurityKind};
use crate::instance::{pair_count, Instance};
use crate::tree::{Branch, NodeKind, TreeModel, TreeNode, MODEL_FORMAT_VERSION};

/// Node-local work (objects × candidate tests) above which candidates are
/// scored on the rayon pool.
const PARALLEL_WORK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Balance + efficiency + λ · impurity reduction, per unit cost.
    Enhanced,
    /// Balance + efficiency, per unit cost.
    Asr,
    /// Largest reduction in heterogeneous pairs.
    Ip,
    /// Most even split by object count.
    Bal,
    /// Information gain.
    C45,
    /// Gini reduction.
    Cart,
    /// Information gain per unit cost.
    CostC45,
    /// Gini reduction per unit cost.
    CostCart,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Enhanced,
        Algorithm::Asr,
        Algorithm::Ip,
        Algorithm::Bal,
        Algorithm::C45,
        Algorithm::Cart,
        Algorithm::CostC45,
        Algorithm::CostCart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Enhanced => "enhanced",
            Algorithm::Asr => "asr",
            Algorithm::Ip => "ip",
            Algorithm::Bal => "bal",
            Algorithm::C45 => "c45",
            Algorithm::Cart => "cart",
            Algorithm::CostC45 => "c-c45",
            Algorithm::CostCart => "c-cart",
        }
    }

    /// Impurity that the criterion itself is built on, if fixed.
    pub fn native_impurity(self) -> Option<ImpurityKind> {
        match self {
            Algorithm::C45 | Algorithm::CostC45 => Some(ImpurityKind::Entropy),
            Algorithm::Cart | Algorithm::CostCart => Some(ImpurityKind::Gini),
            _ => None,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower || a.name().replace('-', "") == lower)
            .ok_or_else(|| Error::UnknownTag(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub algorithm: Algorithm,
    /// Weight of the discrimination term; only read by [`Algorithm::Enhanced`].
    pub lambda: f64,
    /// Impurity for the discrimination term. Baselines with a fixed
    /// criterion (C4.5, CART and their cost variants) ignore it.
    pub impurity: ImpurityKind,
}

impl GreedyConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        GreedyConfig {
            algorithm,
            lambda: 0.0,
            impurity: algorithm.native_impurity().unwrap_or_default(),
        }
    }

    pub fn enhanced(lambda: f64, impurity: ImpurityKind) -> Self {
        GreedyConfig {
            algorithm: Algorithm::Enhanced,
            lambda,
            impurity,
        }
    }

    /// Impurity used for the discrimination term and for pruning risk.
    pub fn effective_impurity(&self) -> ImpurityKind {
        self.algorithm.native_impurity().unwrap_or(self.impurity)
    }

    fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidInstance(format!(
                "trade-off weight must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Score components of one candidate test at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub test: usize,
    /// `p(N) - p(N_t^{v*})`, `v*` the child with most objects.
    pub bal: f64,
    /// Probability-weighted normalized `f^OR` gain of uncovered objects.
    pub eff: f64,
    /// `p(N) (f(N) - f(N|t))`.
    pub disc: f64,
    pub cost: u32,
    /// Value of the configured criterion; the argmax is selected.
    pub total: f64,
}

impl ScoreBreakdown {
    /// `(bal + eff) / cost`, the criterion without impurity reduction.
    pub fn regularizer(&self) -> f64 {
        (self.bal + self.eff) / self.cost as f64
    }
}

/// Per-child aggregates of a candidate split.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildSummary {
    pub value: u8,
    pub objects: usize,
    pub class_weights: Vec<u64>,
    pub weight: u64,
    pub pairs: u128,
}

/// Nonempty children of `node` under `test`, ascending by outcome.
pub fn split_summary(inst: &Instance, node: &NodeState, test: usize) -> Vec<ChildSummary> {
    let l = inst.n_classes();
    let k = inst.arity(test) as usize;
    let col = inst.column(test);
    let mut counts = vec![0usize; k];
    let mut classes = vec![0u64; k * l];
    for &i in &node.objects {
        let i = i as usize;
        let v = col[i] as usize;
        counts[v] += 1;
        classes[v * l + inst.label(i)] += inst.weight(i);
    }
    (0..k)
        .filter(|&v| counts[v] > 0)
        .map(|v| {
            let class_weights = classes[v * l..(v + 1) * l].to_vec();
            ChildSummary {
                value: v as u8,
                objects: counts[v],
                weight: class_weights.iter().sum(),
                pairs: pair_count(&class_weights),
                class_weights,
            }
        })
        .collect()
}

/// `p(N) - p(N_t^{v*})` with `v*` the child holding the most objects
/// (lowest outcome on ties).
pub fn balance_term(inst: &Instance, children: &[ChildSummary]) -> f64 {
    let node_weight: u64 = children.iter().map(|c| c.weight).sum();
    let mut largest = &children[0];
    for c in &children[1..] {
        if c.objects > largest.objects {
            largest = c;
        }
    }
    (node_weight - largest.weight) as f64 / inst.total_weight() as f64
}

/// `Σ_i p(x_i) (f^OR_i(S ∪ {t}) - f^OR_i(S)) / (1 - f^OR_i(S))` over objects
/// not yet covered at `node`.
pub fn efficiency_term(
    inst: &Instance,
    context: &CoverageContext,
    node: &NodeState,
    test: usize,
    children: &[ChildSummary],
) -> f64 {
    let here = node.stats();
    let k = inst.arity(test) as usize;
    let mut by_value: Vec<Option<NodeStats>> = vec![None; k];
    for c in children {
        by_value[c.value as usize] = Some(NodeStats {
            weight: c.weight,
            pairs: c.pairs,
        });
    }
    let col = inst.column(test);
    let total = inst.total_weight() as f64;
    let mut acc = 0.0;
    for &i in &node.objects {
        let i = i as usize;
        let w = inst.weight(i);
        if context.is_covered(w, here) {
            continue;
        }
        let before = context.remaining(w, here);
        let child = by_value[col[i] as usize].expect("object's own child is nonempty");
        let after = context.remaining(w, child);
        let normalized = ((before - after) / before).max(0.0);
        acc += (w as f64 / total) * normalized;
    }
    acc
}

/// `p(N) (f(N) - f(N|t))`.
pub fn discrimination_term(
    inst: &Instance,
    node: &NodeState,
    children: &[ChildSummary],
    kind: ImpurityKind,
) -> f64 {
    node.weight as f64 / inst.total_weight() as f64 * impurity_gain(node, children, kind)
}

/// `f(N) - f(N|t)`, clamped at zero.
pub fn impurity_gain(node: &NodeState, children: &[ChildSummary], kind: ImpurityKind) -> f64 {
    let to_f = |w: &[u64]| w.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let parent = impurity_of(&to_f(&node.class_weights), kind);
    let mut after = 0.0;
    for c in children {
        after += c.weight as f64 / node.weight as f64 * impurity_of(&to_f(&c.class_weights), kind);
    }
    clamp_reduction(parent - after)
}

/// Scores one candidate. `children` must come from [`split_summary`].
pub fn score_test(
    inst: &Instance,
    context: &CoverageContext,
    node: &NodeState,
    test: usize,
    children: &[ChildSummary],
    config: &GreedyConfig,
) -> ScoreBreakdown {
    let cost = inst.cost(test);
    let costf = cost as f64;
    let kind = config.effective_impurity();
    let (bal, eff, disc, total) = match config.algorithm {
        Algorithm::Enhanced | Algorithm::Asr => {
            let bal = balance_term(inst, children);
            let eff = efficiency_term(inst, context, node, test, children);
            let disc = discrimination_term(inst, node, children, kind);
            let total = if config.algorithm == Algorithm::Enhanced {
                (bal + eff + config.lambda * disc) / costf
            } else {
                (bal + eff) / costf
            };
            (bal, eff, disc, total)
        }
        Algorithm::Ip => {
            let after: u128 = children.iter().map(|c| c.pairs).sum();
            (0.0, 0.0, 0.0, (node.pairs - after) as f64)
        }
        Algorithm::Bal => {
            let largest = children.iter().map(|c| c.objects).max().unwrap_or(0);
            (0.0, 0.0, 0.0, -(largest as f64))
        }
        Algorithm::C45 | Algorithm::Cart => {
            let gain = impurity_gain(node, children, kind);
            (0.0, 0.0, 0.0, gain)
        }
        Algorithm::CostC45 | Algorithm::CostCart => {
            let gain = impurity_gain(node, children, kind);
            (0.0, 0.0, 0.0, gain / costf)
        }
    };
    ScoreBreakdown {
        test,
        bal,
        eff,
        disc,
        cost,
        total,
    }
}

/// Scores every unused test that actually splits `node`, in test order.
pub fn score_candidates(
    inst: &Instance,
    context: &CoverageContext,
    node: &NodeState,
    config: &GreedyConfig,
) -> Vec<(ScoreBreakdown, Vec<ChildSummary>)> {
    let free: Vec<usize> = (0..inst.n_tests()).filter(|&t| !node.used[t]).collect();
    let eval = |&t: &usize| {
        let children = split_summary(inst, node, t);
        (children.len() >= 2).then(|| {
            (
                score_test(inst, context, node, t, &children, config),
                children,
            )
        })
    };
    if node.objects.len() * free.len() >= PARALLEL_WORK {
        // collect keeps test order, so the argmax below is unaffected
        free.par_iter().filter_map(eval).collect()
    } else {
        free.iter().filter_map(eval).collect()
    }
}

/// Result of [`select_test`].
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Split {
        chosen: ScoreBreakdown,
        children: Vec<ChildSummary>,
        /// Best `(bal + eff) / cost` over all candidates.
        best_regularizer: f64,
        /// Candidates scored; each one touches every object of the node.
        candidates: usize,
    },
    /// No unused test separates any two objects of the node.
    Inseparable,
}

/// Argmax of the configured criterion over unused, non-constant tests.
pub fn select_test(
    inst: &Instance,
    context: &CoverageContext,
    node: &NodeState,
    config: &GreedyConfig,
) -> Selection {
    let scored = score_candidates(inst, context, node, config);
    let candidates = scored.len();
    let best_regularizer = scored
        .iter()
        .map(|(s, _)| s.regularizer())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<(ScoreBreakdown, Vec<ChildSummary>)> = None;
    for (s, c) in scored {
        if best.as_ref().is_none_or(|(b, _)| s.total > b.total) {
            best = Some((s, c));
        }
    }
    match best {
        Some((chosen, children)) => Selection::Split {
            chosen,
            children,
            best_regularizer,
            candidates,
        },
        None => Selection::Inseparable,
    }
}

/// Diagnostics gathered during induction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InductionTrace {
    /// `(object, test)` score evaluations per tree level.
    pub touches_per_depth: Vec<u64>,
    /// Chosen breakdown and best regularizer value at every split, preorder.
    pub splits: Vec<(usize, ScoreBreakdown, f64)>,
    /// Nodes turned into leaves because no test separated them.
    pub inseparable: usize,
}

pub fn induce(inst: &Instance, config: &GreedyConfig) -> Result<TreeModel> {
    induce_traced(inst, config).map(|(t, _)| t)
}

pub fn induce_traced(
    inst: &Instance,
    config: &GreedyConfig,
) -> Result<(TreeModel, InductionTrace)> {
    config.validate()?;
    let context = CoverageContext::new(inst);
    let mut trace = InductionTrace::default();
    let mut nodes: Vec<TreeNode> = Vec::new();
    // (state, parent id and branch slot)
    let mut stack: Vec<(NodeState, Option<(usize, usize)>)> = vec![(NodeState::root(inst), None)];
    while let Some((state, parent)) = stack.pop() {
        let id = nodes.len();
        if let Some((p, slot)) = parent {
            if let NodeKind::Internal { children, .. } = &mut nodes[p].kind {
                children[slot].node = id;
            }
        }
        let mut node = TreeNode {
            depth: state.depth,
            weight: state.weight,
            objects: state.objects.len(),
            class_weights: state.class_weights.clone(),
            label: state.majority_class(),
            kind: NodeKind::Leaf,
        };
        if state.stops(inst) {
            nodes.push(node);
            continue;
        }
        let selection = select_test(inst, &context, &state, config);
        let Selection::Split {
            chosen,
            children,
            best_regularizer,
            candidates,
        } = selection
        else {
            trace.inseparable += 1;
            nodes.push(node);
            continue;
        };
        if trace.touches_per_depth.len() <= state.depth {
            trace.touches_per_depth.resize(state.depth + 1, 0);
        }
        trace.touches_per_depth[state.depth] += (candidates * state.objects.len()) as u64;
        trace.splits.push((id, chosen, best_regularizer));

        let kids = state.partition(inst, chosen.test);
        debug_assert_eq!(kids.len(), children.len());
        node.kind = NodeKind::Internal {
            test: chosen.test,
            children: kids
                .iter()
                .map(|(v, _)| Branch {
                    value: *v,
                    node: usize::MAX,
                })
                .collect(),
        };
        nodes.push(node);
        for (slot, (_, kid)) in kids.into_iter().enumerate().rev() {
            stack.push((kid, Some((id, slot))));
        }
    }
    let model = TreeModel {
        format_version: MODEL_FORMAT_VERSION,
        test_names: inst.test_names().to_vec(),
        class_names: inst.class_names().to_vec(),
        total_weight: inst.total_weight(),
        root: 0,
        nodes,
    };
    Ok((model, trace))
}
