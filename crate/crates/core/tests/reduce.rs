#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeSet;

use common::*;
use dgplan::netmodel::ieee33;
use dgplan::reduce::*;
use dgplan::scengen::{build_scenarios, Scenario, ScenarioOptions, ScenarioSet};
use proptest::prelude::*;

fn feature(id: usize, de: Vec<f64>, xi: usize) -> FeatureVector {
    FeatureVector {
        scenario_id: id,
        de,
        xi,
    }
}

fn set_of(n: usize) -> ScenarioSet {
    let probs: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let total: f64 = probs.iter().sum();
    ScenarioSet::from_scenarios(
        (0..n)
            .map(|i| Scenario::nominal(i + 1, BTreeSet::from([1, 2 + i % 3]), probs[i] / total, 3, 1))
            .collect(),
    )
}

#[test]
fn baseline_features_zero_and_stranded() {
    let (net, profile) = ieee33();
    let profile = profile.window(2).unwrap();
    let ok = Scenario::nominal(1, BTreeSet::from([18]), 1.0, 33, 2);
    let f = baseline_unserved(&net, &profile, &ok, &highs()).unwrap();
    assert!(f.de.iter().all(|&x| x.abs() < 1e-9));
    assert_eq!(f.xi, 1);

    let stranded = Scenario::nominal(2, BTreeSet::from([18, 19]), 1.0, 33, 2);
    let f = baseline_unserved(&net, &profile, &stranded, &highs()).unwrap();
    let want: f64 = (0..2)
        .map(|t| stranded.demand_p(&net, &profile, 19, t) * net.base_mva)
        .sum();
    assert!((f.de[18] - want).abs() < 1e-9 && want > 0.0);
    assert_eq!(f.xi, 2);
}

#[test]
fn feature_xi_matches_fault_count() {
    let (net, profile) = ieee33();
    let profile = profile.window(1).unwrap();
    let opts = ScenarioOptions {
        cap_3line: Some(20),
        seed: 4,
        ..ScenarioOptions::default()
    };
    let set = build_scenarios(&net, &profile, &opts).unwrap();
    let sample: Vec<Scenario> = set.scenarios.iter().step_by(37).cloned().collect();
    let f = baseline_features(&net, &profile, &sample, &highs(), true).unwrap();
    for (s, f) in sample.iter().zip(&f) {
        assert_eq!(f.xi, s.faults.len());
        assert_eq!(f.scenario_id, s.id);
        assert!(f.de.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn identity_reduction() {
    let set = set_of(7);
    let features: Vec<FeatureVector> = (0..7)
        .map(|i| feature(i + 1, vec![i as f64, (i * i) as f64], 2))
        .collect();
    let r = reduce(
        &set,
        &features,
        &ReduceOptions {
            kmax: 7,
            restarts: 3,
            seed: 2,
            k: Some(7),
        },
    )
    .unwrap();
    assert_eq!(r.reduced.len(), 7);
    for (a, b) in r.reduced.scenarios.iter().zip(&set.scenarios) {
        assert_eq!((a.id, &a.faults, a.prob), (b.id, &b.faults, b.prob));
    }
    assert_eq!(r.clustering.wcss, 0.0);
}

#[test]
fn identical_scenarios_merge() {
    let set = set_of(2);
    let features = vec![feature(1, vec![1.0, 2.0], 2), feature(2, vec![1.0, 2.0], 2)];
    let points = standardize(&features);
    let c = kmeans(&points, 1, 0, 2).unwrap();
    let out = reduce_scenarios(&set, &points, &c).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out.scenarios[0].id, 1);
    assert!((out.scenarios[0].prob - 1.0).abs() < 1e-12);
    assert_eq!(out.scenarios[0].cluster.as_ref().unwrap().members, 2);
}

#[test]
fn standardize_drops_constant_columns() {
    let f = vec![feature(1, vec![0.0, 1.0], 2), feature(2, vec![0.0, 3.0], 3)];
    let p = standardize(&f);
    assert_eq!(p, vec![vec![-1.0, -1.0], vec![1.0, 1.0]]);
}

#[test]
fn elbow_on_two_slope_curve_is_exact() {
    for knee in [3, 10, 17] {
        let curve: Vec<(usize, f64)> = (1..=30)
            .map(|k| {
                let y = if k <= knee {
                    1000.0 - 60.0 * k as f64
                } else {
                    1000.0 - 60.0 * knee as f64 - 2.0 * (k - knee) as f64
                };
                (k, y)
            })
            .collect();
        assert_eq!(elbow_select(&curve).unwrap().k, knee);
    }
}

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 4..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centroids_are_member_means(points in cloud(), k in 1usize..6, seed in 0u64..100) {
        let k = k.min(points.len());
        let c = kmeans(&points, k, seed, 2).unwrap();
        let mut wcss = 0.0;
        for cl in 0..k {
            let m = c.members(cl);
            prop_assert!(!m.is_empty());
            for d in 0..3 {
                let mean = m.iter().map(|&i| points[i][d]).sum::<f64>() / m.len() as f64;
                prop_assert!((mean - c.centroids[cl][d]).abs() <= 1e-9);
            }
            wcss += m.iter().map(|&i| (0..3).map(|d| (points[i][d] - c.centroids[cl][d]).powi(2)).sum::<f64>()).sum::<f64>();
        }
        prop_assert!((wcss - c.wcss).abs() <= 1e-9 * (1.0 + wcss));
    }

    #[test]
    fn reduction_conserves_mass(points in cloud(), k in 1usize..8, seed in 0u64..100) {
        let n = points.len();
        let k = k.min(n);
        let set = set_of(n);
        let c = kmeans(&points, k, seed, 2).unwrap();
        let out = reduce_scenarios(&set, &points, &c).unwrap();
        prop_assert_eq!(out.len(), k);
        prop_assert!((out.total_prob() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn wcss_curve_is_monotone_and_deterministic(points in cloud(), seed in 0u64..100) {
        let kmax = points.len().min(8);
        let a = wcss_curve(&points, kmax, seed, 2).unwrap();
        prop_assert_eq!(&a, &wcss_curve(&points, kmax, seed, 2).unwrap());
        for w in a.windows(2) {
            prop_assert!(w[1].wcss <= w[0].wcss);
        }
    }
}
