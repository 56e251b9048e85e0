//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#![allow(clippy::field_reassign_with_default, clippy::needless_range_loop)]

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use dgplan::milp::*;
use dgplan::netmodel::{check_radial, ieee33, structural_islands, IncomeClass};
use dgplan::reduce::*;
use dgplan::scengen::{build_scenarios, read_scenarios, ScenarioOptions, ScenarioSet};
use dgplan::solver::{self, validate_solution, SolveOptions, SolveStatus};
use dgplan::study::{Study, StudyConfig};

type Check = Result<String, String>;

/// Physics findings shared with the invariant criterion.
#[derive(Default)]
struct Physics {
    instances: usize,
    failures: Vec<String>,
}

impl Physics {
    fn dispatch(&mut self, label: &str, prob: &PlanningProblem, plan: &Plan, ds: &[DispatchSolution]) {
        for (sc, d) in prob.scenarios.scenarios.iter().zip(ds) {
            self.instances += 1;
            let v = physics_residuals(prob, sc, plan, d, 1e-6);
            if !v.is_empty() {
                self.failures.push(format!("{label} scenario {}: {:?}", sc.id, v[0]));
            }
            for (t, st) in d.steps.iter().enumerate() {
                let r = check_radial(&prob.net, &st.closed_set());
                if !r.radial {
                    self.failures
                        .push(format!("{label} scenario {} t={t}: {}", sc.id, r.diagnostic));
                }
            }
        }
    }

    fn model(&mut self, label: &str, model: &MilpModel, sol: &solver::Solution) {
        self.instances += 1;
        let v = validate_solution(model, sol, 1e-6);
        if !v.is_empty() {
            self.failures
                .push(format!("{label}: {} violations, first {:?}", v.len(), v[0]));
        }
    }
}

fn within(t: Instant, limit_s: f64) -> Result<f64, String> {
    let s = t.elapsed().as_secs_f64();
    if s < limit_s {
        Ok(s)
    } else {
        Err(format!("took {s:.1} s, limit {limit_s} s"))
    }
}

fn collect(results: Vec<dgplan::Result<DispatchSolution>>) -> Result<Vec<DispatchSolution>, String> {
    results
        .into_iter()
        .collect::<dgplan::Result<Vec<_>>>()
        .map_err(|e| e.to_string())
}

fn scenario_count() -> Check {
    let t = Instant::now();
    let (net, profile) = ieee33();
    let set = build_scenarios(&net, &profile, &ScenarioOptions::default()).map_err(|e| e.to_string())?;
    let mass = (set.total_prob() - 1.0).abs();
    let s = within(t, 5.0)?;
    if set.len() != 5456 || mass > 1e-9 {
        return Err(format!("{} scenarios, |sum p - 1| = {mass:e}", set.len()));
    }
    Ok(format!("5456 scenarios, |sum p - 1| = {mass:.1e}, {s:.2} s"))
}

fn single_fault_restorability(phys: &mut Physics) -> Check {
    let t = Instant::now();
    let (net, profile) = ieee33();
    let profile = profile.window(2).map_err(|e| e.to_string())?;
    let opts = ScenarioOptions {
        sizes: vec![1],
        diagnostic: true,
        ..ScenarioOptions::default()
    };
    let set = build_scenarios(&net, &profile, &opts).map_err(|e| e.to_string())?;
    let n = set.len();
    let prob = PlanningProblem::new(net, profile, set, PlanningParams::default());
    let plan = Plan::empty(33);
    let ds = collect(dispatch_fixed_plan(
        &prob,
        &plan,
        &prob.scenarios.scenarios,
        &highs(),
        false,
    ))?;
    let s = within(t, 120.0)?;
    phys.dispatch("single faults", &prob, &plan, &ds);
    let shed: Vec<String> = prob
        .scenarios
        .scenarios
        .iter()
        .zip(&ds)
        .filter(|(_, d)| d.total_shed_mwh(prob.profile.dt) > 1e-9)
        .map(|(sc, d)| {
            format!(
                "line {:?} sheds {:.3} MWh",
                sc.faults,
                d.total_shed_mwh(prob.profile.dt)
            )
        })
        .collect();
    if n != 32 || !shed.is_empty() {
        return Err(format!("{n} solves in {s:.1} s; {}", shed.join("; ")));
    }
    Ok(format!("32 single faults fully restored, {s:.1} s"))
}

fn oracle_equivalence(phys: &mut Physics) -> Check {
    let t = Instant::now();
    let net = six_bus();
    let params = PlanningParams {
        n_dg_max: 1,
        p_max: 0.2,
        ..PlanningParams::default()
    };
    let mut detail = Vec::new();
    for e in [0.05, f64::INFINITY] {
        let set = scenarios(6, 1, &[(&[1, 4], 0.5), (&[2, 3], 0.5)]);
        let prob = PlanningProblem::new(net.clone(), flat(1), set, params.clone()).with_equity(uniform_equity(&net, e));
        let de = build_deterministic_equivalent(&prob).map_err(|e| e.to_string())?;
        let ext = solver::solve(&de.model, &highs()).map_err(|e| e.to_string())?;
        let exact = solver::solve(&de.model, &SolveOptions::enumerator()).map_err(|e| e.to_string())?;
        phys.model("oracle (external)", &de.model, &ext);
        phys.model("oracle (enumerator)", &de.model, &exact);
        let (a, b) = (ext.objective.unwrap_or(f64::NAN), exact.objective.unwrap_or(f64::NAN));
        if ext.status != SolveStatus::Optimal || exact.status != SolveStatus::Optimal || (a - b).abs() > 1e-6 {
            return Err(format!(
                "E={e}: external {a} ({:?}) vs enumerator {b} ({:?})",
                ext.status, exact.status
            ));
        }
        detail.push(format!("E={e}: {a:.6}"));
    }
    let s = within(t, 60.0)?;
    Ok(format!("{}, {s:.1} s", detail.join(", ")))
}

fn physics_invariants(phys: &Physics) -> Check {
    if phys.failures.is_empty() {
        Ok(format!(
            "{} solved instances within 1e-6, all switch sets radial",
            phys.instances
        ))
    } else {
        Err(format!(
            "{} of {} checks failed: {}",
            phys.failures.len(),
            phys.instances,
            phys.failures[..phys.failures.len().min(3)].join("; ")
        ))
    }
}

fn desk_config(dir: &Path) -> StudyConfig {
    let mut cfg = StudyConfig::default();
    cfg.output = dir.to_path_buf();
    cfg.horizon = Some(4);
    cfg.reduction.k = Some(20);
    cfg.reduction.kmax = 20;
    cfg.reduction.seed = 1;
    cfg.solver.time_limit_s = 900.0;
    cfg.test.n_test = 320;
    cfg
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn max_low_income_elsi(path: &Path) -> Result<f64, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut max: f64 = 0.0;
    for row in text.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        if f[1] == IncomeClass::Low.as_str() {
            max = max.max(f[2].parse::<f64>().map_err(|e| e.to_string())?);
        }
    }
    Ok(max)
}

fn equity_trend(dir: &Path) -> Check {
    let t = Instant::now();
    let study = Study::new(desk_config(dir)).map_err(|e| e.to_string())?;
    study.gen().map_err(|e| e.to_string())?;
    study.reduce().map_err(|e| e.to_string())?;
    let rows = study.report().map_err(|e| e.to_string())?;
    let s = within(t, 1800.0)?;
    let tags = ["0.02", "0.05", "0.08", "0.12", "inf"];
    let mut cost = Vec::new();
    for tag in tags {
        let v = read_json(&dir.join(format!("sweep/plan_e{tag}.json")))?;
        cost.push(v["unserved_cost"].as_f64().ok_or("plan summary lacks unserved_cost")?);
    }
    let mut errors = Vec::new();
    // tags run tightest to loosest
    for (w, tag) in cost.windows(2).zip(&tags[1..]) {
        if w[1] > w[0] + 1e-6 {
            errors.push(format!("(a) unserved cost rises to {} at E={tag}", w[1]));
        }
    }
    let by_e: BTreeMap<String, f64> = rows
        .iter()
        .map(|r| (dgplan::evaluate::fmt_e(r.e.unwrap_or(f64::NAN)), r.equity_cost))
        .collect();
    if rows.len() != 5 || by_e.get("inf").copied() != Some(0.0) {
        errors.push(format!("(b) reference row: {by_e:?}"));
    }
    if let Some((e, c)) = by_e.iter().find(|(_, &c)| c < -1e-6) {
        errors.push(format!("(b) equity cost {c} at E={e}"));
    }
    let tight = max_low_income_elsi(&dir.join("sweep/elsi_e0.02.csv"))?;
    let loose = max_low_income_elsi(&dir.join("sweep/elsi_einf.csv"))?;
    if tight > loose + 1e-6 {
        errors.push(format!("(c) low-income ELSI {tight} at 0.02 > {loose} at inf"));
    }
    let costs: Vec<String> = cost.iter().map(|c| format!("{c:.2}")).collect();
    let detail = format!(
        "unserved cost [{}], equity cost {:?}, max low-income ELSI {tight:.4} (0.02) vs {loose:.4} (inf), {s:.0} s",
        costs.join(", "),
        rows.iter().map(|r| r.equity_cost).collect::<Vec<_>>()
    );
    if errors.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", errors.join("; ")))
    }
}

fn feasibility_by_eps(dir: &Path, phys: &mut Physics) -> Check {
    let reduced = read_scenarios(dir.join("reduced.json")).map_err(|e| format!("needs the desk study: {e}"))?;
    let study = Study::new(desk_config(dir)).map_err(|e| e.to_string())?;
    let stranded = reduced
        .scenarios
        .iter()
        .filter(|sc| {
            structural_islands(&study.net, &sc.faults)
                .map(|p| {
                    p.components
                        .iter()
                        .enumerate()
                        .any(|(c, buses)| c != p.main_component && buses.iter().any(|&b| study.net.bus(b).peak_p > 0.0))
                })
                .unwrap_or(false)
        })
        .count();
    if stranded == 0 {
        return Err("reduced set has no stranded component".into());
    }
    let t = Instant::now();
    let prob = PlanningProblem::new(
        study.net.clone(),
        study.profile.clone(),
        reduced,
        study.config.problem.clone(),
    )
    .with_equity(uniform_equity(&study.net, 0.0));
    let out =
        solve_planning(&prob, &study.config.solver.options().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let s = within(t, 300.0)?;
    let de = build_deterministic_equivalent(&prob).map_err(|e| e.to_string())?;
    phys.dispatch("E=0 desk", &prob, &out.plan, &out.dispatch);
    if !validate_solution(&de.model, &out.solution, 1e-6).is_empty() {
        phys.failures
            .push("E=0 desk: planning solution violates the plain model".into());
    }
    phys.instances += 1;
    let positive = out.eps.iter().filter(|&&e| e > 0.0).count();
    if !matches!(out.status, SolveStatus::Optimal | SolveStatus::Feasible) || positive == 0 {
        return Err(format!("status {:?}, {positive} buses with eps > 0", out.status));
    }
    Ok(format!(
        "{stranded} stranded scenarios, status {:?}, eps > 0 on {positive} buses, {s:.0} s",
        out.status
    ))
}

fn reduction_correctness() -> Check {
    let (net, profile) = ieee33();
    let profile = profile.window(1).map_err(|e| e.to_string())?;
    let set = build_scenarios(&net, &profile, &ScenarioOptions::default()).map_err(|e| e.to_string())?;
    let features = baseline_features(&net, &profile, &set.scenarios, &highs(), true).map_err(|e| e.to_string())?;
    let points = standardize(&features);
    let mut errors = Vec::new();
    for k in 1..=12 {
        let c = kmeans(&points, k, 3, 2).map_err(|e| e.to_string())?;
        let out = reduce_scenarios(&set, &points, &c).map_err(|e| e.to_string())?;
        let mass = (out.total_prob() - 1.0).abs();
        if mass > 1e-9 {
            errors.push(format!("k={k}: mass off by {mass:e}"));
        }
        for cl in 0..k {
            let m = c.members(cl);
            for d in 0..points[0].len() {
                let mean = m.iter().map(|&i| points[i][d]).sum::<f64>() / m.len() as f64;
                if (mean - c.centroids[cl][d]).abs() > 1e-9 {
                    errors.push(format!("k={k} cluster {cl}: centroid is not the member mean"));
                    break;
                }
            }
        }
    }

    // identity on scenarios with distinct features
    let mut seen = BTreeSet::new();
    let keep: Vec<usize> = (0..points.len())
        .filter(|&i| seen.insert(points[i].iter().map(|x| x.to_bits()).collect::<Vec<_>>()))
        .take(60)
        .collect();
    let total: f64 = keep.iter().map(|&i| set.scenarios[i].prob).sum();
    let sub = ScenarioSet::from_scenarios(
        keep.iter()
            .map(|&i| {
                let mut s = set.scenarios[i].clone();
                s.prob /= total;
                s
            })
            .collect(),
    );
    let sub_features: Vec<FeatureVector> = keep.iter().map(|&i| features[i].clone()).collect();
    let n = sub.len();
    let r = reduce(
        &sub,
        &sub_features,
        &ReduceOptions {
            kmax: n,
            restarts: 2,
            seed: 5,
            k: Some(n),
        },
    )
    .map_err(|e| e.to_string())?;
    let identity = r.reduced.len() == n
        && r.reduced
            .scenarios
            .iter()
            .zip(&sub.scenarios)
            .all(|(a, b)| a.id == b.id && a.faults == b.faults && a.prob == b.prob);
    if !identity {
        errors.push(format!("k={n} reduction is not the identity"));
    }

    for knee in [2, 7, 13] {
        let curve: Vec<(usize, f64)> = (1..=25)
            .map(|k| {
                let slope = |k: usize| {
                    if k <= knee {
                        500.0 - 40.0 * k as f64
                    } else {
                        500.0 - 40.0 * knee as f64 - (k - knee) as f64
                    }
                };
                (k, slope(k))
            })
            .collect();
        let got = elbow_select(&curve).map_err(|e| e.to_string())?.k;
        if got != knee {
            errors.push(format!("elbow {got} for knee {knee}"));
        }
    }
    if errors.is_empty() {
        Ok(format!(
            "k=1..12 on {} scenarios, identity at k={n}, three knees exact",
            set.len()
        ))
    } else {
        Err(errors.join("; "))
    }
}

fn small_config(dir: &Path) -> StudyConfig {
    let mut cfg = StudyConfig::default();
    cfg.output = dir.to_path_buf();
    cfg.horizon = Some(1);
    cfg.scenarios.cap_3line = Some(40);
    cfg.reduction.kmax = 6;
    cfg.reduction.k = Some(4);
    cfg.test.n_test = 10;
    cfg.equity.sweep = vec![0.05, f64::INFINITY];
    cfg
}

/// Relative path and bytes of every CSV and plan file under `dir`.
fn artifacts(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let p = entry.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let name = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            let file = p.file_name().unwrap().to_string_lossy();
            if name.ends_with(".csv") || file.starts_with("plan") {
                out.insert(name, std::fs::read(&p).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

fn determinism() -> Check {
    let mut runs = Vec::new();
    let mut dirs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let study = Study::new(small_config(dir.path())).map_err(|e| e.to_string())?;
        study.gen().map_err(|e| e.to_string())?;
        study.reduce().map_err(|e| e.to_string())?;
        study.report().map_err(|e| e.to_string())?;
        runs.push(artifacts(dir.path())?);
        dirs.push(dir);
    }
    let names: Vec<&String> = runs[0].keys().collect();
    if runs[0].keys().ne(runs[1].keys()) {
        return Err("the runs wrote different files".into());
    }
    let differ: Vec<&&String> = names.iter().filter(|n| runs[0][**n] != runs[1][**n]).collect();
    if !differ.is_empty() {
        return Err(format!("files differ: {differ:?}"));
    }
    Ok(format!("{} CSV and plan files identical", names.len()))
}

fn main() -> ExitCode {
    let mut phys = Physics::default();
    let desk = tempfile::tempdir().expect("temporary directory");
    let results: Vec<(&str, Check)> = vec![
        ("1 scenario count", scenario_count()),
        ("2 single-fault restorability", single_fault_restorability(&mut phys)),
        ("3 oracle equivalence", oracle_equivalence(&mut phys)),
        ("5 equity trend", equity_trend(desk.path())),
        ("6 feasibility by eps", feasibility_by_eps(desk.path(), &mut phys)),
        ("7 reduction correctness", reduction_correctness()),
        ("8 determinism", determinism()),
    ];
    let mut results = results;
    results.insert(3, ("4 physics invariants", physics_invariants(&phys)));
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("criterion {name}: PASS ({d})"),
            Err(d) => {
                failed += 1;
                println!("criterion {name}: FAIL ({d})");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
