//! Decomposable impurity functions.
//!
//! Every impurity here has the form `f(N) = Σ_c (p_c / p) · f_c(p_c / p)`, a
//! mass-weighted average of a per-class score. Entropy uses
//! `f_c = -log2(p_c / p)`, Gini uses `f_c = 1 - p_c / p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reductions this far below zero are floating-point noise and are clamped.
pub const REDUCTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ImpurityKind {
    /// Shannon entropy, base 2.
    #[default]
    Entropy,
    Gini,
}

impl ImpurityKind {
    /// Per-class score `f_c` for a class holding `share` of the node mass.
    #[inline]
    pub fn class_score(self, share: f64) -> f64 {
        match self {
            ImpurityKind::Entropy => {
                if share <= 0.0 {
                    // only ever multiplied by a zero share
                    0.0
                } else {
                    -share.log2()
                }
            }
            ImpurityKind::Gini => 1.0 - share,
        }
    }

    /// Upper bound on `max_N max_{x in N} f_{c(x)}(N)` given the minimum object
    /// probability `delta`.
    pub fn gamma_bound(self, delta: f64) -> f64 {
        match self {
            ImpurityKind::Entropy => (1.0 / delta).log2(),
            ImpurityKind::Gini => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ImpurityKind::Entropy => "entropy",
            ImpurityKind::Gini => "gini",
        }
    }
}

impl std::str::FromStr for ImpurityKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "entropy" => Ok(ImpurityKind::Entropy),
            "gini" => Ok(ImpurityKind::Gini),
            other => Err(format!("unknown impurity `{other}`")),
        }
    }
}

/// Per-class probability mass of a node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassHistogram {
    mass: Vec<f64>,
}

impl ClassHistogram {
    pub fn new(mass: Vec<f64>) -> Self {
        debug_assert!(mass.iter().all(|m| *m >= 0.0));
        ClassHistogram { mass }
    }

    /// Builds a histogram from integer multiplicities.
    pub fn from_counts(counts: &[u64]) -> Self {
        ClassHistogram {
            mass: counts.iter().map(|&c| c as f64).collect(),
        }
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn is_pure(&self) -> bool {
        self.mass.iter().filter(|m| **m > 0.0).count() <= 1
    }
}

/// Impurity of a raw mass vector. Returns 0 for an empty vector or zero mass.
#[inline]
pub(crate) fn impurity_of(masses: &[f64], kind: ImpurityKind) -> f64 {
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for &m in masses {
        if m > 0.0 {
            let share = m / total;
            acc += share * kind.class_score(share);
        }
    }
    // a pure node evaluates to exactly 0 for both kinds, but Gini of a
    // single class can come out as a tiny negative number
    acc.max(0.0)
}

/// Impurity of a node.
pub fn impurity(h: &ClassHistogram, kind: ImpurityKind) -> Result<f64> {
    if h.total() <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(impurity_of(&h.mass, kind))
}

/// Mass-weighted impurity of the children of a split, `f(N | t)`.
///
/// Empty children contribute nothing.
pub fn conditional_impurity(
    parent: &ClassHistogram,
    children: &[ClassHistogram],
    kind: ImpurityKind,
) -> Result<f64> {
    let parent_mass = parent.total();
    if parent_mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let child_mass: f64 = children.iter().map(ClassHistogram::total).sum();
    if child_mass > parent_mass * (1.0 + 1e-9) {
        return Err(Error::MassExceedsParent {
            parent: parent_mass,
            children: child_mass,
        });
    }
    Ok(weighted_child_impurity(
        parent_mass,
        children.iter().map(|c| c.masses()),
        kind,
    ))
}

pub(crate) fn weighted_child_impurity<'a>(
    parent_mass: f64,
    children: impl Iterator<Item = &'a [f64]>,
    kind: ImpurityKind,
) -> f64 {
    let mut acc = 0.0;
    for child in children {
        let m: f64 = child.iter().sum();
        if m > 0.0 {
            acc += (m / parent_mass) * impurity_of(child, kind);
        }
    }
    acc
}

/// `f(N) - f(N | t)`, clamped to zero when within [`REDUCTION_TOLERANCE`].
pub fn impurity_reduction(
    parent: &ClassHistogram,
    children: &[ClassHistogram],
    kind: ImpurityKind,
) -> Result<f64> {
    let before = impurity(parent, kind)?;
    let after = conditional_impurity(parent, children, kind)?;
    Ok(clamp_reduction(before - after))
}

#[inline]
pub(crate) fn clamp_reduction(diff: f64) -> f64 {
    if (-REDUCTION_TOLERANCE..0.0).contains(&diff) {
        0.0
    } else {
        diff
    }
}
