//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cdt_core::coverage::{CoverageContext, NodeState};
use cdt_core::dataset::{CostMode, DEFAULT_THETA};
use cdt_core::impurity::{impurity_reduction, ClassHistogram, ImpurityKind};
use cdt_core::inducer::{induce, score_candidates, Algorithm, GreedyConfig};
use cdt_core::instance::{Instance, InstanceParts};
use cdt_core::oracle::{
    approx_ratio_sweep, min_cost_complexity, random_tiny, random_tree, submodularity_audit,
    TinySpec,
};
use cdt_core::pruner::{alpha_grid, tree_risk, weakest_link_sequence};
use cdt_core::train::{run, Tag, TrainOptions};
use cdt_core::tree::TreeModel;
use common::{mean, prepared, prepared_with_theta, DATASETS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: std::ops::Range<u64> = 0..5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(budget: Duration, start: Instant) -> (bool, String) {
    let e = start.elapsed();
    (
        e <= budget,
        format!("{:.2}s of {}s", e.as_secs_f64(), budget.as_secs()),
    )
}

/// Root 50/50 node; test 0 splits it (24,0)/(26,50), test 1 (25,25)/(25,25).
fn two_split_instance() -> Instance {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..100usize {
        let class = usize::from(i >= 50);
        let left = class == 0 && i < 24;
        rows.push(vec![u8::from(!left), (i % 2) as u8]);
        labels.push(class);
    }
    InstanceParts::binary(rows, labels, vec![1; 100])
        .build()
        .unwrap()
}

fn root_test(inst: &Instance, config: GreedyConfig) -> Option<usize> {
    induce(inst, &config).unwrap().node(0).test()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let inst = two_split_instance();
    let ip = root_test(&inst, GreedyConfig::new(Algorithm::Ip));
    let c45 = root_test(&inst, GreedyConfig::new(Algorithm::C45));
    let cart = root_test(&inst, GreedyConfig::new(Algorithm::Cart));
    let asr = root_test(&inst, GreedyConfig::new(Algorithm::Asr));
    let (fast, time) = within(Duration::from_secs(1), start);
    Outcome {
        pass: ip == Some(1) && c45 == Some(0) && cart == Some(0) && fast,
        detail: format!("ip -> {ip:?} (even), c45 -> {c45:?}, cart -> {cart:?} (discriminative); asr -> {asr:?}; {time}"),
    }
}

struct Means {
    auc: f64,
    cost: f64,
    height: f64,
}

fn means(name: &str, tag: &str, mode: CostMode) -> Means {
    means_at(name, tag, mode, DEFAULT_THETA)
}

fn means_at(name: &str, tag: &str, mode: CostMode, theta: f64) -> Means {
    let tag: Tag = tag.parse().unwrap();
    let mut auc = Vec::new();
    let mut cost = Vec::new();
    let mut height = Vec::new();
    for seed in SEEDS {
        let data = prepared_with_theta(name, seed, mode, theta);
        let (_, r) = run(name, &data, &tag, &TrainOptions::default()).unwrap();
        auc.push(r.auc.expect("test split has both classes"));
        cost.push(r.expected_cost);
        height.push(r.expected_height);
    }
    Means {
        auc: mean(&auc),
        cost: mean(&cost),
        height: mean(&height),
    }
}

/// The reference breast-w trees were grown with a minimum leaf of 1% of
/// the data instead of the default threshold.
const BREAST_W_THETA: f64 = 0.01;

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let targets = [
        ("c45", 0.968, 0.03, 3.5, 1.0),
        ("enhanced-c45", 0.982, 0.03, 3.48, 1.0),
        ("asr", 0.967, 0.05, 4.08, 1.5),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (tag, auc, auc_tol, height, height_tol) in targets {
        let m = means_at("breast-w", tag, CostMode::Unit, BREAST_W_THETA);
        let ok = (m.auc - auc).abs() <= auc_tol && (m.height - height).abs() <= height_tol;
        pass &= ok;
        parts.push(format!(
            "{tag} auc {:.3} (target {auc}±{auc_tol}) height {:.2} (target {height}±{height_tol}){}",
            m.auc,
            m.height,
            if ok { "" } else { " MISS" }
        ));
    }
    let (fast, time) = within(Duration::from_secs(60), start);
    parts.push(format!("theta {BREAST_W_THETA}; {time}"));
    Outcome {
        pass: pass && fast,
        detail: parts.join("; "),
    }
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["tic-tac-toe", "iris"] {
        let e = means(name, "enhanced-c45", CostMode::Unit);
        let c = means(name, "c45", CostMode::Unit);
        let a = means(name, "asr", CostMode::Unit);
        let ok = e.cost <= c.cost * 1.05 && e.auc >= a.auc - 0.02;
        pass &= ok;
        parts.push(format!(
            "{name}: cost enhanced {:.3} vs c45 {:.3}, auc enhanced {:.3} vs asr {:.3}{}",
            e.cost,
            c.cost,
            e.auc,
            a.auc,
            if ok { "" } else { " MISS" }
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let spec = TinySpec::default();
    let mut failures = Vec::new();
    let mut checks = 0;
    for seed in 0..100u64 {
        let tiny = random_tiny(&mut ChaCha8Rng::seed_from_u64(seed), &spec);
        let r = submodularity_audit(&tiny);
        checks += r.checks;
        if !r.passed {
            failures.push(format!("seed {seed}: {:?}", r.counterexample));
        }
    }
    let (fast, time) = within(Duration::from_secs(30), start);
    Outcome {
        pass: failures.is_empty() && fast,
        detail: format!(
            "100 instances, {checks} checks, {} failures {failures:?}; {time}",
            failures.len()
        ),
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let rows = approx_ratio_sweep(0, 200, &[0.0, 1.0], &TinySpec::default()).unwrap();
    let bad = rows.iter().filter(|r| !r.within_bound()).count();
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max0 = rows
        .iter()
        .filter(|r| r.lambda == 0.0)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    let optimal = rows.iter().filter(|r| (r.ratio - 1.0).abs() < 1e-9).count();
    let (fast, time) = within(Duration::from_secs(120), start);
    Outcome {
        pass: bad == 0 && rows.len() == 400 && fast,
        detail: format!(
            "{} ratios, {bad} out of bounds, max ratio {max:.4} (lambda 0: {max0:.4}), {optimal} exactly optimal; {time}",
            rows.len()
        ),
    }
}

/// Objects of every internal node, walking `tree` over the training instance.
fn walk_nodes(inst: &Instance, tree: &TreeModel, mut visit: impl FnMut(&NodeState, usize)) {
    let mut stack = vec![(tree.root, NodeState::root(inst))];
    while let Some((id, state)) = stack.pop() {
        let Some(test) = tree.node(id).test() else {
            continue;
        };
        visit(&state, test);
        for (value, child) in state.partition(inst, test) {
            let (next, _) = tree.child(id, value).unwrap();
            stack.push((next, child));
        }
    }
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut same = 0;
    let mut total = 0;
    for name in DATASETS {
        for seed in SEEDS {
            let inst = prepared(name, seed, CostMode::Unit).instance().unwrap();
            let a = induce(&inst, &GreedyConfig::enhanced(0.0, ImpurityKind::Entropy)).unwrap();
            let b = induce(&inst, &GreedyConfig::new(Algorithm::Asr)).unwrap();
            total += 1;
            same += usize::from(a == b);
        }
    }
    pass &= same == total;
    parts.push(format!("lambda 0 == asr on {same}/{total} training splits"));
    let c45 = GreedyConfig::new(Algorithm::C45);
    for name in ["breast-w", "tic-tac-toe"] {
        let mut checked = 0;
        let mut ties = 0;
        let mut mismatches = 0;
        let mut identical = 0;
        for seed in SEEDS {
            let inst = prepared(name, seed, CostMode::Unit).instance().unwrap();
            let ctx = CoverageContext::new(&inst);
            let big = induce(&inst, &GreedyConfig::enhanced(1e9, ImpurityKind::Entropy)).unwrap();
            let reference = induce(&inst, &c45).unwrap();
            identical += usize::from(big.split_sequence() == reference.split_sequence());
            walk_nodes(&inst, &big, |state, chosen| {
                let mut gains: Vec<(f64, usize)> = score_candidates(&inst, &ctx, state, &c45)
                    .into_iter()
                    .map(|(s, _)| (s.total, s.test))
                    .collect();
                gains.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
                if gains.len() > 1 && gains[0].0 - gains[1].0 <= 1e-6 {
                    ties += 1;
                    return;
                }
                checked += 1;
                if gains[0].1 != chosen {
                    mismatches += 1;
                }
            });
        }
        pass &= mismatches == 0;
        parts.push(format!(
            "{name}: lambda 1e9 agrees with c45 at {}/{checked} nodes ({ties} near-ties skipped, {identical}/5 identical sequences)",
            checked - mismatches
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let classes = rng.gen_range(2..=5);
        let arity = rng.gen_range(2..=4);
        let mut children = vec![vec![0.0; classes]; arity];
        for c in 0..classes {
            for child in children.iter_mut() {
                // mix of integer counts and real masses, some empty
                child[c] = if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen_range(0.0..50.0)
                };
            }
        }
        let parent: Vec<f64> = (0..classes)
            .map(|c| children.iter().map(|k| k[c]).sum())
            .collect();
        if parent.iter().sum::<f64>() == 0.0 {
            continue;
        }
        let parent = ClassHistogram::new(parent);
        let kids: Vec<ClassHistogram> = children.into_iter().map(ClassHistogram::new).collect();
        for kind in [ImpurityKind::Entropy, ImpurityKind::Gini] {
            worst = worst.min(impurity_reduction(&parent, &kids, kind).unwrap());
        }
    }
    let (fast, time) = within(Duration::from_secs(5), start);
    Outcome {
        pass: worst >= -1e-12 && fast,
        detail: format!("20000 reductions, minimum {worst:.3e}; {time}"),
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut compared = 0;
    let mut bad = 0;
    for _ in 0..50 {
        let classes = rng.gen_range(2..=3);
        let tree = random_tree(&mut rng, 12, classes);
        for kind in [ImpurityKind::Entropy, ImpurityKind::Gini] {
            let family = weakest_link_sequence(&tree, kind);
            for alpha in alpha_grid() {
                let m = family.at(alpha);
                let got = tree_risk(&m, kind) + alpha * m.n_leaves() as f64;
                let best = min_cost_complexity(&tree, kind, alpha);
                compared += 1;
                if (got - best).abs() > 1e-12 {
                    bad += 1;
                }
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(30), start);
    Outcome {
        pass: bad == 0 && fast,
        detail: format!(
            "{compared} (tree, impurity, alpha) optima compared, {bad} mismatches; {time}"
        ),
    }
}

fn criterion_9() -> Outcome {
    let e = means("tic-tac-toe", "enhanced-c45", CostMode::Random);
    let c = means("tic-tac-toe", "c-c45", CostMode::Random);
    Outcome {
        pass: e.cost <= c.cost,
        detail: format!(
            "mean expected cost enhanced-c45 {:.3} vs c-c45 {:.3} ({:.1}% lower); auc {:.3} vs {:.3}",
            e.cost,
            c.cost,
            100.0 * (1.0 - e.cost / c.cost),
            e.auc,
            c.auc
        ),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("two-split discrimination example", criterion_1),
        ("breast-w reproduction", criterion_2),
        ("ordering on tic-tac-toe and iris", criterion_3),
        ("submodularity audit", criterion_4),
        ("approximation-bound sweep", criterion_5),
        ("structural equivalences", criterion_6),
        ("impurity non-negativity fuzz", criterion_7),
        ("pruning oracle equivalence", criterion_8),
        ("random-cost sanity", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "criterion {} {name}: {} | {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
