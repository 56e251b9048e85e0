//! Scenario reduction: no-DG unserved-energy features, K-means clustering,
//! elbow selection and probability-aggregated representatives.

mod kmeans;

pub use kmeans::{elbow_select, kmeans, kmeans_from, wcss_curve, Clustering, Elbow};

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{dispatch_fixed_plan, Plan, PlanningParams, PlanningProblem};
use crate::netmodel::{LoadProfile, Network};
use crate::scengen::{ClusterInfo, Scenario, ScenarioSet};
use crate::solver::SolveOptions;

/// Observation of one scenario: unserved energy per bus with no DG (MWh,
/// index = bus − 1) and the number of tripped lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub scenario_id: usize,
    pub de: Vec<f64>,
    pub xi: usize,
}

impl FeatureVector {
    pub fn raw(&self) -> Vec<f64> {
        let mut v = self.de.clone();
        v.push(self.xi as f64);
        v
    }
}

fn baseline_problem(net: &Network, profile: &LoadProfile) -> PlanningProblem {
    PlanningProblem::new(
        net.clone(),
        profile.clone(),
        ScenarioSet::from_scenarios(Vec::new()),
        PlanningParams::default(),
    )
}

/// No-DG second stage of one scenario.
pub fn baseline_unserved(
    net: &Network,
    profile: &LoadProfile,
    scenario: &Scenario,
    opts: &SolveOptions,
) -> Result<FeatureVector> {
    baseline_features(net, profile, std::slice::from_ref(scenario), opts, true)?
        .pop()
        .ok_or_else(|| Error::Solver("no baseline result".into()))
}

/// Features of every scenario, in input order. With `screen`, intervals
/// whose optimum is evident skip the solver (results are identical).
pub fn baseline_features(
    net: &Network,
    profile: &LoadProfile,
    scenarios: &[Scenario],
    opts: &SolveOptions,
    screen: bool,
) -> Result<Vec<FeatureVector>> {
    let prob = baseline_problem(net, profile);
    let plan = Plan::empty(net.n_buses());
    let out = dispatch_fixed_plan(&prob, &plan, scenarios, opts, screen);
    scenarios
        .iter()
        .zip(out)
        .map(|(sc, d)| {
            let d = d?;
            let mut de = vec![0.0; net.n_buses()];
            for st in &d.steps {
                for (e, s) in de.iter_mut().zip(&st.shed_p) {
                    *e += profile.dt * s.max(0.0);
                }
            }
            Ok(FeatureVector {
                scenario_id: sc.id,
                de,
                xi: sc.faults.len(),
            })
        })
        .collect()
}

/// Z-scores each feature column, dropping columns that never vary.
pub fn standardize(features: &[FeatureVector]) -> Vec<Vec<f64>> {
    let raw: Vec<Vec<f64>> = features.iter().map(FeatureVector::raw).collect();
    let Some(first) = raw.first() else { return Vec::new() };
    let n = raw.len() as f64;
    let mut cols = Vec::new();
    for d in 0..first.len() {
        let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
            (a.min(r[d]), b.max(r[d]))
        });
        if lo == hi {
            continue;
        }
        let mean = raw.iter().map(|r| r[d]).sum::<f64>() / n;
        let sd = (raw.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n).sqrt();
        cols.push((d, mean, sd));
    }
    raw.iter()
        .map(|r| cols.iter().map(|&(d, m, s)| (r[d] - m) / s).collect())
        .collect()
}

/// One representative per cluster: the member nearest the centroid (lowest
/// scenario id on ties), carrying the cluster's total probability. Output is
/// ordered by representative id; cluster numbers follow that order.
pub fn reduce_scenarios(set: &ScenarioSet, points: &[Vec<f64>], clustering: &Clustering) -> Result<ScenarioSet> {
    if points.len() != set.len() || clustering.assignments.len() != set.len() {
        return Err(Error::InvalidArgument(
            "clustering does not cover the scenario set".into(),
        ));
    }
    let mut reps = Vec::with_capacity(clustering.k);
    for c in 0..clustering.k {
        let members = clustering.members(c);
        if members.is_empty() {
            return Err(Error::Validation(format!("cluster {c} is empty")));
        }
        let dist = |i: usize| -> f64 {
            points[i]
                .iter()
                .zip(&clustering.centroids[c])
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        };
        let rep = *members
            .iter()
            .min_by(|&&a, &&b| {
                dist(a)
                    .total_cmp(&dist(b))
                    .then(set.scenarios[a].id.cmp(&set.scenarios[b].id))
            })
            .unwrap();
        let mass: f64 = members.iter().map(|&i| set.scenarios[i].prob).sum();
        reps.push((rep, members.len(), mass));
    }
    reps.sort_by_key(|&(rep, _, _)| set.scenarios[rep].id);
    let scenarios = reps
        .into_iter()
        .enumerate()
        .map(|(c, (rep, members, mass))| {
            let mut s = set.scenarios[rep].clone();
            s.prob = mass;
            s.cluster = Some(ClusterInfo {
                cluster: c,
                members,
                aggregated_prob: mass,
            });
            s
        })
        .collect();
    let out = ScenarioSet {
        scenarios,
        rng_seed: set.rng_seed,
        tau_model: set.tau_model,
    };
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceOptions {
    pub kmax: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Fixed cluster count; the elbow picks one when absent.
    pub k: Option<usize>,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions {
            kmax: 300,
            restarts: 8,
            seed: 0,
            k: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub reduced: ScenarioSet,
    /// (k, σ(k)) for k = 1..=kmax.
    pub curve: Vec<(usize, f64)>,
    pub elbow: Option<Elbow>,
    pub clustering: Clustering,
}

/// Clusters standardized features and reduces the set.
pub fn reduce(set: &ScenarioSet, features: &[FeatureVector], opts: &ReduceOptions) -> Result<Reduction> {
    if features.len() != set.len() || features.iter().zip(&set.scenarios).any(|(f, s)| f.scenario_id != s.id) {
        return Err(Error::InvalidArgument("features do not match the scenario set".into()));
    }
    let mut points = standardize(features);
    if points.first().is_some_and(|p| p.is_empty()) {
        // nothing varies: every scenario looks alike
        points = vec![vec![0.0]; set.len()];
    }
    let kmax = opts.kmax.min(set.len());
    let curves = if kmax >= 1 {
        wcss_curve(&points, kmax, opts.seed, opts.restarts)?
    } else {
        Vec::new()
    };
    let curve: Vec<(usize, f64)> = curves.iter().map(|c| (c.k, c.wcss)).collect();
    let (k, elbow) = match opts.k {
        Some(k) => (k, None),
        None => {
            let e = elbow_select(&curve)?;
            (e.k, Some(e))
        }
    };
    let clustering = match curves.get(k.wrapping_sub(1)) {
        Some(c) if k >= 1 => c.clone(),
        _ => kmeans(&points, k, opts.seed, opts.restarts)?,
    };
    let reduced = reduce_scenarios(set, &points, &clustering)?;
    Ok(Reduction {
        reduced,
        curve,
        elbow,
        clustering,
    })
}

pub fn wcss_csv(curve: &[(usize, f64)]) -> String {
    let mut s = String::from("k,wcss\n");
    for (k, w) in curve {
        let _ = writeln!(s, "{k},{w}");
    }
    s
}

pub fn write_features(path: impl AsRef<Path>, features: &[FeatureVector]) -> Result<()> {
    let mut s = String::from("scenario,xi");
    if let Some(f) = features.first() {
        for j in 1..=f.de.len() {
            let _ = write!(s, ",de{j}");
        }
    }
    s.push('\n');
    for f in features {
        let _ = write!(s, "{},{}", f.scenario_id, f.xi);
        for v in &f.de {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}
