//! The induced decision tree, its JSON schema and DOT rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coverage::majority;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub value: u8,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeKind {
    Leaf,
    Internal { test: usize, children: Vec<Branch> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub depth: usize,
    /// Training mass in multiplicity units.
    pub weight: u64,
    /// Number of (coalesced) training objects.
    pub objects: usize,
    pub class_weights: Vec<u64>,
    /// Majority class of the training objects at this node.
    pub label: usize,
    #[serde(flatten)]
    pub kind: NodeKind,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }

    pub fn test(&self) -> Option<usize> {
        match &self.kind {
            NodeKind::Internal { test, .. } => Some(*test),
            NodeKind::Leaf => None,
        }
    }

    pub fn children(&self) -> &[Branch] {
        match &self.kind {
            NodeKind::Internal { children, .. } => children,
            NodeKind::Leaf => &[],
        }
    }

    /// Class distribution of the training mass at this node.
    pub fn distribution(&self) -> Vec<f64> {
        if self.weight == 0 {
            let n = self.class_weights.len().max(1);
            return vec![1.0 / n as f64; self.class_weights.len()];
        }
        self.class_weights
            .iter()
            .map(|&w| w as f64 / self.weight as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeModel {
    pub format_version: u32,
    pub test_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Total training mass; `p(node) = weight / total_weight`.
    pub total_weight: u64,
    pub root: usize,
    pub nodes: Vec<TreeNode>,
}

/// Where a row ended up and how it got there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub leaf: usize,
    /// Tests evaluated along the way, root first.
    pub tests: Vec<usize>,
    /// Number of times an outcome had no branch and the row fell back to
    /// the heaviest child.
    pub fallbacks: usize,
}

impl TreeModel {
    /// A tree consisting of a single leaf.
    pub fn leaf(
        test_names: Vec<String>,
        class_names: Vec<String>,
        class_weights: Vec<u64>,
        objects: usize,
    ) -> Self {
        let weight = class_weights.iter().sum();
        TreeModel {
            format_version: MODEL_FORMAT_VERSION,
            test_names,
            class_names,
            total_weight: weight,
            root: 0,
            nodes: vec![TreeNode {
                depth: 0,
                weight,
                objects,
                label: majority(&class_weights),
                class_weights,
                kind: NodeKind::Leaf,
            }],
        }
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn n_internal(&self) -> usize {
        self.size() - self.n_leaves()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn probability(&self, id: usize) -> f64 {
        self.nodes[id].weight as f64 / self.total_weight as f64
    }

    /// Child reached from `id` with outcome `value`. Unknown outcomes go to
    /// the heaviest child (first one on ties); the flag reports that.
    pub fn child(&self, id: usize, value: u8) -> Option<(usize, bool)> {
        let children = self.nodes[id].children();
        if let Some(b) = children.iter().find(|b| b.value == value) {
            return Some((b.node, false));
        }
        let mut best: Option<&Branch> = None;
        for b in children {
            if best.is_none_or(|x| self.nodes[b.node].weight > self.nodes[x.node].weight) {
                best = Some(b);
            }
        }
        best.map(|b| (b.node, true))
    }

    pub fn route(&self, row: &[u8]) -> Route {
        let mut id = self.root;
        let mut tests = Vec::new();
        let mut fallbacks = 0;
        while let Some(t) = self.nodes[id].test() {
            tests.push(t);
            let (next, fell_back) = self
                .child(id, row[t])
                .expect("internal node without children");
            fallbacks += fell_back as usize;
            id = next;
        }
        Route {
            leaf: id,
            tests,
            fallbacks,
        }
    }

    pub fn predict_proba(&self, row: &[u8]) -> Vec<f64> {
        self.nodes[self.route(row).leaf].distribution()
    }

    pub fn predict(&self, row: &[u8]) -> usize {
        self.nodes[self.route(row).leaf].label
    }

    /// Preorder list of node ids reachable from the root.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            for b in self.nodes[id].children().iter().rev() {
                stack.push(b.node);
            }
        }
        out
    }

    /// Test of every node in preorder, `None` for leaves.
    pub fn split_sequence(&self) -> Vec<Option<usize>> {
        self.preorder()
            .into_iter()
            .map(|id| self.nodes[id].test())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TreeModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: model.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        Ok(model)
    }

    /// Graphviz rendering. Internal nodes read `test (count)`, leaves carry
    /// the decided class; edges are labeled with the outcome value.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n  node [shape=box, fontname=\"Helvetica\"];\n");
        for id in self.preorder() {
            let node = &self.nodes[id];
            let label = match node.test() {
                Some(t) => format!("{} ({})", self.test_names[t], node.weight),
                None => format!("{} ({})", self.class_names[node.label], node.weight),
            };
            let shape = if node.is_leaf() {
                ", style=rounded"
            } else {
                ""
            };
            let _ = writeln!(out, "  n{id} [label=\"{}\"{shape}];", escape(&label));
        }
        for id in self.preorder() {
            for b in self.nodes[id].children() {
                let _ = writeln!(out, "  n{id} -> n{} [label=\"{}\"];", b.node, b.value);
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn stump() -> TreeModel {
        TreeModel {
            format_version: MODEL_FORMAT_VERSION,
            test_names: vec!["age=old".into()],
            class_names: vec!["no".into(), "yes".into()],
            total_weight: 4,
            root: 0,
            nodes: vec![
                TreeNode {
                    depth: 0,
                    weight: 4,
                    objects: 4,
                    class_weights: vec![2, 2],
                    label: 0,
                    kind: NodeKind::Internal {
                        test: 0,
                        children: vec![Branch { value: 0, node: 1 }, Branch { value: 1, node: 2 }],
                    },
                },
                TreeNode {
                    depth: 1,
                    weight: 3,
                    objects: 3,
                    class_weights: vec![2, 1],
                    label: 0,
                    kind: NodeKind::Leaf,
                },
                TreeNode {
                    depth: 1,
                    weight: 1,
                    objects: 1,
                    class_weights: vec![0, 1],
                    label: 1,
                    kind: NodeKind::Leaf,
                },
            ],
        }
    }

    #[test]
    fn dot_of_depth_one_tree() {
        let dot = stump().to_dot();
        assert_eq!(dot.matches("[label=").count(), 5);
        assert_eq!(dot.matches("->").count(), 2);
        assert!(dot.contains("age=old (4)"));
        assert!(dot.contains("\"yes (1)\""));
        assert!(dot.contains("n0 -> n1 [label=\"0\"]"));
    }

    #[test]
    fn json_round_trip() {
        let t = stump();
        let back = TreeModel::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn rejects_future_format() {
        let mut t = stump();
        t.format_version = 99;
        let text = serde_json::to_string(&t).unwrap();
        assert!(matches!(
            TreeModel::from_json(&text),
            Err(Error::FormatVersion { .. })
        ));
    }

    #[test]
    fn unknown_outcome_falls_back_to_heaviest_child() {
        let t = stump();
        let r = t.route(&[7]);
        assert_eq!(r.leaf, 1);
        assert_eq!(r.fallbacks, 1);
        assert_eq!(t.predict(&[1]), 1);
    }
}
