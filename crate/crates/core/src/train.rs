//! Algorithm tags and the train / tune / prune / report pipeline.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::PreparedDataset;
use crate::error::{Error, Result};
use crate::impurity::ImpurityKind;
use crate::inducer::{induce, Algorithm, GreedyConfig};
use crate::instance::Instance;
use crate::metrics::{evaluate, tune_lambda, LambdaTuning, RunReport};
use crate::pruner::{prune, PruneConfig};
use crate::tree::TreeModel;

/// An algorithm tag such as `c45`, `enhanced-cart` or `p-asr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub algorithm: Algorithm,
    /// Impurity of an enhanced tag; `None` means "use the configured default".
    pub impurity: Option<ImpurityKind>,
    pub prune: bool,
}

impl Tag {
    pub fn new(algorithm: Algorithm) -> Self {
        Tag {
            algorithm,
            impurity: None,
            prune: false,
        }
    }

    pub fn enhanced(impurity: ImpurityKind) -> Self {
        Tag {
            algorithm: Algorithm::Enhanced,
            impurity: Some(impurity),
            prune: false,
        }
    }

    pub fn pruned(mut self) -> Self {
        self.prune = true;
        self
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prune {
            f.write_str("p-")?;
        }
        match (self.algorithm, self.impurity) {
            (Algorithm::Enhanced, Some(ImpurityKind::Entropy)) => f.write_str("enhanced-c45"),
            (Algorithm::Enhanced, Some(ImpurityKind::Gini)) => f.write_str("enhanced-cart"),
            (a, _) => f.write_str(a.name()),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let parse = |body: &str| -> Option<Tag> {
            match body {
                "ec45" | "enhanced-c45" | "enhancedc45" => {
                    Some(Tag::enhanced(ImpurityKind::Entropy))
                }
                "ecart" | "enhanced-cart" | "enhancedcart" => {
                    Some(Tag::enhanced(ImpurityKind::Gini))
                }
                _ => body.parse::<Algorithm>().ok().map(Tag::new),
            }
        };
        if let Some(tag) = parse(&lower) {
            return Ok(tag);
        }
        let body = lower.strip_prefix("p-").or_else(|| lower.strip_prefix('p'));
        body.and_then(parse)
            .map(Tag::pruned)
            .ok_or_else(|| Error::UnknownTag(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Fixed λ for enhanced tags; tuned on validation when `None`.
    pub lambda: Option<f64>,
    /// Impurity for enhanced tags that do not name one.
    pub impurity: ImpurityKind,
    /// Prune even if the tag has no `p` prefix.
    pub prune: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            lambda: None,
            impurity: ImpurityKind::Entropy,
            prune: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub tree: TreeModel,
    pub config: GreedyConfig,
    pub tuning: Option<LambdaTuning>,
    /// Chosen pruning strength, when pruning ran.
    pub alpha: Option<f64>,
    pub unpruned_size: usize,
}

pub fn greedy_config(tag: &Tag, options: &TrainOptions, lambda: f64) -> GreedyConfig {
    match tag.algorithm {
        Algorithm::Enhanced => {
            GreedyConfig::enhanced(lambda, tag.impurity.unwrap_or(options.impurity))
        }
        a => GreedyConfig {
            impurity: a.native_impurity().unwrap_or(options.impurity),
            ..GreedyConfig::new(a)
        },
    }
}

/// Induces on the training instance, tuning λ and pruning on the
/// validation split as the tag and options ask.
pub fn train(
    data: &PreparedDataset,
    inst: &Instance,
    tag: &Tag,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    let mut tuning = None;
    let lambda = match (tag.algorithm, options.lambda) {
        (Algorithm::Enhanced, Some(l)) => l,
        (Algorithm::Enhanced, None) => {
            let impurity = tag.impurity.unwrap_or(options.impurity);
            let t = tune_lambda(inst, impurity, &data.validation)?;
            let l = t.lambda;
            tuning = Some(t);
            l
        }
        _ => 0.0,
    };
    let config = greedy_config(tag, options, lambda);
    let tree = induce(inst, &config)?;
    let unpruned_size = tree.size();
    let (tree, alpha) = if tag.prune || options.prune {
        let sel = prune(
            &tree,
            &PruneConfig::new(config.effective_impurity()),
            &data.validation,
        );
        (sel.tree, Some(sel.alpha))
    } else {
        (tree, None)
    };
    Ok(TrainOutcome {
        tree,
        config,
        tuning,
        alpha,
        unpruned_size,
    })
}

/// Trains and evaluates: AUC on the test split, cost and height on the
/// training distribution.
pub fn run(
    dataset: &str,
    data: &PreparedDataset,
    tag: &Tag,
    options: &TrainOptions,
) -> Result<(TrainOutcome, RunReport)> {
    let start = Instant::now();
    let inst = data.instance()?;
    let outcome = train(data, &inst, tag, options)?;
    let eval = evaluate(&outcome.tree, &inst, &data.test);
    let report = RunReport {
        dataset: dataset.to_string(),
        tag: tag.to_string(),
        cost_mode: data.cost_mode.to_string(),
        seed: data.seed,
        auc: eval.auc,
        expected_cost: eval.expected_cost,
        expected_height: eval.expected_height,
        tree_size: eval.tree_size,
        wall_ms: start.elapsed().as_millis() as u64,
        lambda: (tag.algorithm == Algorithm::Enhanced).then_some(outcome.config.lambda),
        alpha: outcome.alpha,
    };
    Ok((outcome, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tags() {
        let t: Tag = "c45".parse().unwrap();
        assert_eq!(t, Tag::new(Algorithm::C45));
        let t: Tag = "pc45".parse().unwrap();
        assert!(t.prune);
        assert_eq!(t.algorithm, Algorithm::C45);
        let t: Tag = "p-enhanced-cart".parse().unwrap();
        assert_eq!(t, Tag::enhanced(ImpurityKind::Gini).pruned());
        assert_eq!(
            "ec45".parse::<Tag>().unwrap(),
            Tag::enhanced(ImpurityKind::Entropy)
        );
        assert_eq!(
            "ccart".parse::<Tag>().unwrap().algorithm,
            Algorithm::CostCart
        );
        assert_eq!("enhanced".parse::<Tag>().unwrap().impurity, None);
        assert!("pp".parse::<Tag>().is_err());
        assert!("id3".parse::<Tag>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "c45",
            "p-cart",
            "enhanced-c45",
            "p-enhanced-cart",
            "c-c45",
            "asr",
            "enhanced",
        ] {
            let t: Tag = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
            assert_eq!(t.to_string().parse::<Tag>().unwrap(), t);
        }
    }

    #[test]
    fn baseline_ignores_lambda() {
        let opts = TrainOptions {
            lambda: Some(5.0),
            ..Default::default()
        };
        let c = greedy_config(&Tag::new(Algorithm::Cart), &opts, 0.0);
        assert_eq!(c.lambda, 0.0);
        assert_eq!(c.effective_impurity(), ImpurityKind::Gini);
    }
}
