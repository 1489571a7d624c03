//! Minimal cost-complexity (weakest-link) pruning.
//!
//! The risk of a node is `R(node) = p(node) * impurity(node)`; a subtree's
//! risk is the sum over its leaves. Collapsing the internal node with the
//! smallest `g = (R(node) - R(subtree)) / (leaves - 1)` again and again
//! yields a nested family whose member at any α minimizes `R + α * leaves`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::EvalSet;
use crate::impurity::{impurity_of, ImpurityKind};
use crate::metrics::tree_auc;
use crate::tree::{Branch, NodeKind, TreeModel, TreeNode};

/// Values of `g` this close are treated as equal.
pub const G_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub grid: Vec<f64>,
    pub impurity: ImpurityKind,
}

impl PruneConfig {
    pub fn new(impurity: ImpurityKind) -> Self {
        PruneConfig {
            grid: alpha_grid(),
            impurity,
        }
    }
}

/// 20 log-spaced values from 1e-5 to 1.
pub fn alpha_grid() -> Vec<f64> {
    (0..20)
        .map(|i| 10f64.powf(-5.0 + 5.0 * i as f64 / 19.0))
        .collect()
}

/// Risk of a single node as if it were a leaf.
pub fn node_risk(tree: &TreeModel, id: usize, kind: ImpurityKind) -> f64 {
    let node = tree.node(id);
    if node.weight == 0 {
        return 0.0;
    }
    let masses: Vec<f64> = node.class_weights.iter().map(|&w| w as f64).collect();
    tree.probability(id) * impurity_of(&masses, kind)
}

/// Risk of the whole tree: sum over leaves.
pub fn tree_risk(tree: &TreeModel, kind: ImpurityKind) -> f64 {
    tree.preorder()
        .into_iter()
        .filter(|&id| tree.node(id).is_leaf())
        .map(|id| node_risk(tree, id, kind))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneStep {
    /// Node of the base tree that becomes a leaf.
    pub node: usize,
    /// Critical α at which the collapse happens.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneFamily {
    pub base: TreeModel,
    pub steps: Vec<PruneStep>,
    pub impurity: ImpurityKind,
}

impl PruneFamily {
    /// Number of members, the unpruned tree included.
    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// α at which each member takes over; the unpruned tree starts at 0.
    pub fn alphas(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.steps.iter().map(|s| s.alpha))
            .collect()
    }

    /// Member that minimizes `R + α * leaves`.
    pub fn index_at(&self, alpha: f64) -> usize {
        self.steps
            .iter()
            .take_while(|s| s.alpha <= alpha + G_TOLERANCE)
            .count()
    }

    pub fn member(&self, k: usize) -> TreeModel {
        let mut collapsed = vec![false; self.base.size()];
        for s in &self.steps[..k] {
            collapsed[s.node] = true;
        }
        collapse(&self.base, &collapsed)
    }

    pub fn at(&self, alpha: f64) -> TreeModel {
        self.member(self.index_at(alpha))
    }
}

/// Copy of `tree` with every flagged node turned into a leaf, renumbered in
/// preorder.
pub fn collapse(tree: &TreeModel, collapsed: &[bool]) -> TreeModel {
    let mut nodes: Vec<TreeNode> = Vec::new();
    fn copy(tree: &TreeModel, collapsed: &[bool], id: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let src = tree.node(id);
        let new_id = nodes.len();
        nodes.push(TreeNode {
            kind: NodeKind::Leaf,
            class_weights: src.class_weights.clone(),
            ..*src
        });
        if let NodeKind::Internal { test, children } = &src.kind {
            if !collapsed[id] {
                let mut branches = Vec::with_capacity(children.len());
                for b in children {
                    let child = copy(tree, collapsed, b.node, nodes);
                    branches.push(Branch {
                        value: b.value,
                        node: child,
                    });
                }
                nodes[new_id].kind = NodeKind::Internal {
                    test: *test,
                    children: branches,
                };
            }
        }
        new_id
    }
    copy(tree, collapsed, tree.root, &mut nodes);
    TreeModel {
        format_version: tree.format_version,
        test_names: tree.test_names.clone(),
        class_names: tree.class_names.clone(),
        total_weight: tree.total_weight,
        root: 0,
        nodes,
    }
}

/// Builds the nested family by repeatedly collapsing the weakest link.
/// Ties in `g` go to the node earliest in preorder.
pub fn weakest_link_sequence(tree: &TreeModel, kind: ImpurityKind) -> PruneFamily {
    let n = tree.size();
    let risk: Vec<f64> = (0..n).map(|id| node_risk(tree, id, kind)).collect();
    let order = tree.preorder();
    let mut collapsed = vec![false; n];
    let mut steps = Vec::new();
    let mut last_alpha = 0.0f64;
    loop {
        // subtree risk and leaf count of the current tree, bottom-up
        let mut sub_risk = vec![0.0; n];
        let mut leaves = vec![0usize; n];
        for &id in order.iter().rev() {
            let node = tree.node(id);
            if node.is_leaf() || collapsed[id] {
                sub_risk[id] = risk[id];
                leaves[id] = 1;
            } else {
                for b in node.children() {
                    sub_risk[id] += sub_risk[b.node];
                    leaves[id] += leaves[b.node];
                }
            }
        }
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![tree.root];
        let mut visit = Vec::new();
        while let Some(id) = stack.pop() {
            let node = tree.node(id);
            if node.is_leaf() || collapsed[id] {
                continue;
            }
            visit.push(id);
            for b in node.children().iter().rev() {
                stack.push(b.node);
            }
        }
        for id in visit {
            let g = ((risk[id] - sub_risk[id]) / (leaves[id] - 1) as f64).max(0.0);
            if best.is_none_or(|(bg, _)| g < bg - G_TOLERANCE) {
                best = Some((g, id));
            }
        }
        let Some((g, id)) = best else { break };
        last_alpha = last_alpha.max(g);
        collapsed[id] = true;
        steps.push(PruneStep {
            node: id,
            alpha: last_alpha,
        });
    }
    PruneFamily {
        base: tree.clone(),
        steps,
        impurity: kind,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneSelection {
    pub tree: TreeModel,
    pub alpha: f64,
    pub member: usize,
    pub auc: Option<f64>,
}

/// Picks the grid α whose family member has the best validation AUC,
/// preferring smaller trees on ties. With no usable AUC anywhere the
/// unpruned tree is kept.
pub fn select_alpha(family: &PruneFamily, grid: &[f64], validation: &EvalSet) -> PruneSelection {
    let scored: Vec<(f64, usize, Option<f64>, usize)> = grid
        .par_iter()
        .map(|&alpha| {
            let k = family.index_at(alpha);
            let tree = family.member(k);
            (alpha, k, tree_auc(&tree, validation), tree.size())
        })
        .collect();
    let mut best: Option<(f64, usize, Option<f64>, usize)> = None;
    for cand in scored {
        let better = match (&best, cand.2) {
            (None, _) => true,
            (Some(b), Some(a)) => match b.2 {
                None => true,
                Some(ba) => a > ba || (a == ba && cand.3 < b.3),
            },
            (Some(_), None) => false,
        };
        if better {
            best = Some(cand);
        }
    }
    match best {
        Some((alpha, k, auc @ Some(_), _)) => PruneSelection {
            tree: family.member(k),
            alpha,
            member: k,
            auc,
        },
        _ => PruneSelection {
            tree: family.base.clone(),
            alpha: 0.0,
            member: 0,
            auc: None,
        },
    }
}

/// Family construction followed by selection on the configured grid.
pub fn prune(tree: &TreeModel, config: &PruneConfig, validation: &EvalSet) -> PruneSelection {
    let family = weakest_link_sequence(tree, config.impurity);
    select_alpha(&family, &config.grid, validation)
}
