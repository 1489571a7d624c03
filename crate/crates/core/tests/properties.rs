use cdt_core::coverage::{CoverageContext, CoverageState, NodeState};
use cdt_core::dataset::{bin_numeric, coalesce};
use cdt_core::impurity::{impurity, impurity_reduction, ClassHistogram, ImpurityKind};
use cdt_core::inducer::{induce, Algorithm, GreedyConfig};
use cdt_core::instance::InstanceParts;
use cdt_core::metrics::{binary_auc, expected_cost, expected_cost_by_nodes, expected_height};
use cdt_core::oracle::{optimal_tree, random_tiny, TinyInstance, TinySpec};
use cdt_core::pruner::weakest_link_sequence;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind() -> impl Strategy<Value = ImpurityKind> {
    prop_oneof![Just(ImpurityKind::Entropy), Just(ImpurityKind::Gini)]
}

fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop::sample::select(Algorithm::ALL.to_vec())
}

fn tiny(seed: u64) -> TinyInstance {
    random_tiny(&mut ChaCha8Rng::seed_from_u64(seed), &TinySpec::default())
}

proptest! {
    #[test]
    fn impurity_reduction_is_nonnegative(
        children in prop::collection::vec(prop::collection::vec(0u32..40, 3), 2..5),
        kind in kind(),
    ) {
        let parent: Vec<f64> = (0..3).map(|c| children.iter().map(|k| k[c] as f64).sum()).collect();
        prop_assume!(parent.iter().sum::<f64>() > 0.0);
        let kids: Vec<ClassHistogram> = children
            .iter()
            .map(|k| ClassHistogram::new(k.iter().map(|&v| v as f64).collect()))
            .collect();
        let r = impurity_reduction(&ClassHistogram::new(parent), &kids, kind).unwrap();
        prop_assert!(r >= -1e-12);
    }

    #[test]
    fn impurity_ignores_class_order(mut counts in prop::collection::vec(0u64..50, 2..6), kind in kind()) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let a = impurity(&ClassHistogram::from_counts(&counts), kind).unwrap();
        counts.reverse();
        let b = impurity(&ClassHistogram::from_counts(&counts), kind).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn binning_is_permutation_invariant_and_monotone(
        values in prop::collection::vec(-100i32..100, 1..60),
        k in 1usize..7,
        rotate in 0usize..60,
    ) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64 / 4.0).collect();
        let (b1, a1) = bin_numeric("x", &v, k).unwrap();
        let mut w = v.clone();
        let r = rotate % w.len();
        w.rotate_left(r);
        let (b2, _) = bin_numeric("x", &w, k).unwrap();
        prop_assert_eq!(&b1, &b2);
        let mut pairs: Vec<(f64, usize)> = v.iter().copied().zip(a1).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        prop_assert!(pairs.windows(2).all(|p| p[0].1 <= p[1].1));
        prop_assert!(b1.n_bins() <= k);
    }

    #[test]
    fn auc_invariant_under_monotone_transform(
        scores in prop::collection::vec(0u8..20, 2..40),
        labels in prop::collection::vec(any::<bool>(), 40),
    ) {
        let s: Vec<f64> = scores.iter().map(|&x| x as f64 / 20.0).collect();
        let pos = &labels[..s.len()];
        let t: Vec<f64> = s.iter().map(|&x| (3.0 * x).exp() - 7.0).collect();
        prop_assert_eq!(binary_auc(&s, pos), binary_auc(&t, pos));
    }

    #[test]
    fn coalesced_rows_are_distinct_and_mass_preserved(
        rows in prop::collection::vec(prop::collection::vec(0u8..2, 3), 1..30),
        labels in prop::collection::vec(0usize..3, 30),
    ) {
        let labels = &labels[..rows.len()];
        let c = coalesce(&rows, labels, &vec![1; rows.len()], 3).unwrap();
        let mut seen = c.rows.clone();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), c.rows.len());
        prop_assert_eq!(c.weights.iter().sum::<u64>(), rows.len() as u64);
    }

    #[test]
    fn cost_routes_agree_and_unit_cost_is_height(seed in 0u64..5000, alg in algorithm()) {
        let t = tiny(seed);
        let inst = t.instance();
        let tree = induce(inst, &GreedyConfig::new(alg)).unwrap();
        let walk = expected_cost(&tree, inst);
        prop_assert!((walk - expected_cost_by_nodes(&tree, inst.costs())).abs() < 1e-9);
        let unit = inst.clone().with_costs(vec![1; inst.n_tests()]).unwrap();
        prop_assert_eq!(expected_cost(&tree, &unit).to_bits(), expected_height(&tree, &unit).to_bits());
        prop_assert_eq!(tree.size(), 2 * tree.n_internal() + 1);
    }

    #[test]
    fn leaves_stop_or_are_inseparable(seed in 0u64..5000, alg in algorithm()) {
        let t = tiny(seed);
        let inst = t.instance();
        let tree = induce(inst, &GreedyConfig::new(alg)).unwrap();
        for id in tree.preorder() {
            let node = tree.node(id);
            if node.is_leaf() {
                let pure = node.class_weights.iter().filter(|&&w| w > 0).count() <= 1;
                // with distinct rows every multi-object node can still be split
                prop_assert!(pure || node.weight <= inst.theta_units() || node.objects == 1);
            }
        }
    }

    #[test]
    fn optimum_lower_bounds_every_tag(seed in 0u64..5000) {
        let t = tiny(seed);
        let opt = optimal_tree(&t).expected_cost;
        for alg in Algorithm::ALL {
            let tree = induce(t.instance(), &GreedyConfig::new(alg)).unwrap();
            prop_assert!(opt <= expected_cost(&tree, t.instance()) + 1e-12);
        }
    }

    #[test]
    fn optimum_invariant_to_relabeling(seed in 0u64..5000) {
        let t = tiny(seed);
        let inst = t.instance();
        let m = inst.n_tests();
        let l = inst.n_classes();
        let rows: Vec<Vec<u8>> = (0..inst.n_objects())
            .map(|i| (0..m).rev().map(|t| inst.outcome(t, i)).collect())
            .collect();
        let labels: Vec<usize> = inst.labels().iter().map(|&c| l - 1 - c).collect();
        let mut costs = inst.costs().to_vec();
        costs.reverse();
        let mut parts = InstanceParts::binary(rows, labels, inst.weights().to_vec())
            .costs(costs)
            .theta_units(inst.theta_units());
        parts.class_names = inst.class_names().to_vec();
        let other = TinyInstance::new(parts.build().unwrap()).unwrap();
        prop_assert_eq!(optimal_tree(&t).expected_cost, optimal_tree(&other).expected_cost);
    }

    #[test]
    fn coverage_values_in_unit_interval(seed in 0u64..5000) {
        let t = tiny(seed);
        let inst = t.instance();
        let ctx = CoverageContext::new(inst);
        let tree = induce(inst, &GreedyConfig::new(Algorithm::Asr)).unwrap();
        let root = NodeState::root(inst);
        let mut stack = vec![(tree.root, root)];
        while let Some((id, state)) = stack.pop() {
            let cov = CoverageState::at(inst, ctx, &state);
            for o in &cov.objects {
                for v in [o.f_prob, o.f_pairs, o.f_or] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                let or = 1.0 - (1.0 - o.f_prob) * (1.0 - o.f_pairs);
                prop_assert!((o.f_or - or).abs() < 1e-12);
            }
            if let Some(test) = tree.node(id).test() {
                for (v, child) in state.partition(inst, test) {
                    stack.push((tree.child(id, v).unwrap().0, child));
                }
            }
        }
    }

    #[test]
    fn pruning_never_raises_cost(seed in 0u64..5000, kind in kind()) {
        let t = tiny(seed);
        let inst = t.instance();
        let tree = induce(inst, &GreedyConfig::new(Algorithm::C45)).unwrap();
        let family = weakest_link_sequence(&tree, kind);
        let mut last = expected_cost(&tree, inst);
        for k in 1..family.len() {
            let c = expected_cost(&family.member(k), inst);
            prop_assert!(c <= last + 1e-12);
            last = c;
        }
    }
}
