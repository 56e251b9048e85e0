mod common;

use std::collections::BTreeSet;

use common::*;
use dgplan::netmodel::{ieee33, Network};
use dgplan::scengen::*;
use proptest::prelude::*;

fn with_weight(net: &Network, line: usize, w: f64) -> Network {
    let mut lines = net.lines().to_vec();
    lines[line - 1].fault_weight = w;
    Network::new(net.buses().to_vec(), lines, net.system()).unwrap()
}

fn mass_with(set: &ScenarioSet, line: usize) -> f64 {
    set.scenarios
        .iter()
        .filter(|s| s.faults.contains(&line))
        .map(|s| s.prob)
        .sum()
}

#[test]
fn four_faultable_lines_give_six_pairs() {
    // six_bus has five sectionalizing lines; drop one to leave four
    let net = with_weight(&six_bus(), 5, 0.0);
    let opts = ScenarioOptions {
        sizes: vec![2],
        ..ScenarioOptions::default()
    };
    assert_eq!(build_scenarios(&net, &flat(1), &opts).unwrap().len(), 6);
}

#[test]
fn exhaustive_count_matches_binomials() {
    let (net, profile) = ieee33();
    let m = faultable_lines(&net).len();
    let set = build_scenarios(&net, &profile.window(1).unwrap(), &ScenarioOptions::default()).unwrap();
    assert_eq!(set.len(), m * (m - 1) / 2 + m * (m - 1) * (m - 2) / 6);
}

#[test]
fn test_sample_edge_cases() {
    let (net, profile) = ieee33();
    let opts = ScenarioOptions {
        cap_3line: Some(10),
        ..ScenarioOptions::default()
    };
    let set = build_scenarios(&net, &profile.window(1).unwrap(), &opts).unwrap();
    let all = sample_test_scenarios(&set, set.len(), 3, 33).unwrap();
    assert_eq!(all.len(), set.len());
    assert!((all.total_prob() - 1.0).abs() < 1e-9);
    let one = sample_test_scenarios(&set, 1, 3, 33).unwrap();
    assert_eq!(one.scenarios[0].prob, 1.0);
    assert!(sample_test_scenarios(&set, set.len() + 1, 3, 33).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sets_are_normalized_and_deterministic(
        two in any::<bool>(),
        cap in 1usize..200,
        ratio in 0.5f64..4.0,
        seed in any::<u64>(),
    ) {
        let (net, profile) = ieee33();
        let profile = profile.window(2).unwrap();
        let opts = ScenarioOptions {
            sizes: if two { vec![2, 3] } else { vec![3] },
            cap_3line: Some(cap),
            low_income_weight_ratio: ratio,
            seed,
            ..ScenarioOptions::default()
        };
        let a = build_scenarios(&net, &profile, &opts).unwrap();
        prop_assert!((a.total_prob() - 1.0).abs() <= 1e-9);
        let ids: BTreeSet<usize> = a.scenarios.iter().map(|s| s.id).collect();
        prop_assert_eq!(ids.len(), a.len());
        for s in &a.scenarios {
            prop_assert!(s.prob > 0.0);
            prop_assert!(opts.sizes.contains(&s.faults.len()));
        }
        prop_assert_eq!(&a, &build_scenarios(&net, &profile, &opts).unwrap());
        let test = sample_test_scenarios(&a, a.len().min(15), seed, 33).unwrap();
        prop_assert!((test.total_prob() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn raising_a_weight_raises_its_mass(line in 1usize..=32, factor in 1.1f64..5.0) {
        let (net, profile) = ieee33();
        let profile = profile.window(1).unwrap();
        let opts = ScenarioOptions::default();
        let before = build_scenarios(&net, &profile, &opts).unwrap();
        let w = net.lines()[line - 1].fault_weight;
        let after = build_scenarios(&with_weight(&net, line, w * factor), &profile, &opts).unwrap();
        prop_assert!(mass_with(&after, line) > mass_with(&before, line));
    }
}
