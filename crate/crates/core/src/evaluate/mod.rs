//! Scoring a plan on held-out scenarios: per-bus ELSI, expected unserved
//! cost, equity cost against a reference plan, and reduction tables.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::milp::{dispatch_fixed_plan, shed_ratios, Plan, PlanningParams, PlanningProblem};
use crate::netmodel::{LoadProfile, Network};
use crate::scengen::ScenarioSet;
use crate::solver::SolveOptions;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub solve: SolveOptions,
    /// Skip the solver for intervals whose optimum is evident.
    pub screen: bool,
    /// Record failing scenarios instead of aborting.
    pub skip_failures: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            solve: SolveOptions::default(),
            screen: true,
            skip_failures: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub scenario: usize,
    pub prob: f64,
    pub shed_mwh: f64,
    /// Σ_t ΔP/P^D per bus (index = bus − 1).
    pub shed_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    /// Index = bus − 1.
    pub elsi: Vec<f64>,
    pub expected_unserved_cost: f64,
    /// Probability-weighted unserved energy, MWh.
    pub total_shed_mwh: f64,
    pub per_scenario: Vec<ScenarioOutcome>,
    pub plan: Plan,
    pub fingerprint: String,
    /// Σ_s ρ_s mean_t P^D per bus, MW.
    pub avg_load_mw: Vec<f64>,
    /// Scenarios left out with `skip_failures`, with the error text.
    pub failed: Vec<(usize, String)>,
    pub beta: f64,
}

/// Solves each test scenario's second stage with the plan fixed (no
/// equity rows) and aggregates.
pub fn evaluate_plan(
    plan: &Plan,
    test: &ScenarioSet,
    net: &Network,
    profile: &LoadProfile,
    params: &PlanningParams,
    opts: &EvalOptions,
) -> Result<EvaluationReport> {
    test.validate()?;
    let prob = PlanningProblem::new(net.clone(), profile.clone(), test.clone(), params.clone());
    prob.validate()?;
    plan.validate(net, params)?;
    let results = dispatch_fixed_plan(&prob, plan, &test.scenarios, &opts.solve, opts.screen);
    let n = net.n_buses();
    let mut rep = EvaluationReport {
        elsi: vec![0.0; n],
        expected_unserved_cost: 0.0,
        total_shed_mwh: 0.0,
        per_scenario: Vec::with_capacity(test.len()),
        plan: plan.clone(),
        fingerprint: test.fingerprint(),
        avg_load_mw: vec![0.0; n],
        failed: Vec::new(),
        beta: params.beta,
    };
    for (sc, res) in test.scenarios.iter().zip(results) {
        let d = match res {
            Ok(d) => d,
            Err(e) if opts.skip_failures => {
                log::warn!("scenario {} skipped: {e}", sc.id);
                rep.failed.push((sc.id, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let ratios = shed_ratios(&prob, sc, &d);
        let shed = d.total_shed_mwh(profile.dt);
        for (e, r) in rep.elsi.iter_mut().zip(&ratios) {
            *e += sc.prob * r;
        }
        rep.total_shed_mwh += sc.prob * shed;
        rep.per_scenario.push(ScenarioOutcome {
            scenario: sc.id,
            prob: sc.prob,
            shed_mwh: shed,
            shed_ratio: ratios,
        });
    }
    for sc in &test.scenarios {
        let h = profile.horizon() as f64;
        for j in 1..=n {
            let mean: f64 = (0..profile.horizon())
                .map(|t| sc.demand_p(net, profile, j, t))
                .sum::<f64>()
                / h;
            rep.avg_load_mw[j - 1] += sc.prob * mean * net.base_mva;
        }
    }
    rep.expected_unserved_cost = params.beta * 1000.0 * rep.total_shed_mwh;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquityCost {
    /// Extra expected unserved cost over the reference, $ (signed).
    pub cost: f64,
    /// `cost` over the report's expected unserved cost (0 when that is 0).
    pub ratio: f64,
}

fn same_set(a: &EvaluationReport, b: &EvaluationReport) -> Result<()> {
    if a.fingerprint != b.fingerprint {
        return Err(Error::FingerprintMismatch(a.fingerprint.clone(), b.fingerprint.clone()));
    }
    Ok(())
}

pub fn equity_cost(report: &EvaluationReport, reference: &EvaluationReport) -> Result<EquityCost> {
    same_set(report, reference)?;
    let cost = report.expected_unserved_cost - reference.expected_unserved_cost;
    let ratio = if report.expected_unserved_cost > 0.0 {
        cost / report.expected_unserved_cost
    } else {
        0.0
    };
    Ok(EquityCost { cost, ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusReduction {
    pub bus: usize,
    pub elsi: f64,
    pub elsi_no_dg: f64,
    pub reduction_pct: f64,
    /// The bus never sheds without DG, so no reduction is defined.
    pub no_outage: bool,
    pub avg_load_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub buses: Vec<BusReduction>,
    /// Reduction of expected unserved energy, %.
    pub system_shed_reduction_pct: f64,
}

pub fn reduction_report(plan_report: &EvaluationReport, no_dg: &EvaluationReport) -> Result<ReductionReport> {
    same_set(plan_report, no_dg)?;
    let buses = (0..plan_report.elsi.len())
        .map(|i| {
            let (e, e0) = (plan_report.elsi[i], no_dg.elsi[i]);
            let no_outage = e0 == 0.0;
            BusReduction {
                bus: i + 1,
                elsi: e,
                elsi_no_dg: e0,
                reduction_pct: if no_outage { 0.0 } else { 100.0 * (e0 - e) / e0 },
                no_outage,
                avg_load_mw: plan_report.avg_load_mw[i],
            }
        })
        .collect();
    let system = if no_dg.total_shed_mwh > 0.0 {
        100.0 * (no_dg.total_shed_mwh - plan_report.total_shed_mwh) / no_dg.total_shed_mwh
    } else {
        0.0
    };
    Ok(ReductionReport {
        buses,
        system_shed_reduction_pct: system,
    })
}

/// `bus,income_class,elsi,reduction_pct,avg_load_mw`.
pub fn elsi_csv(net: &Network, report: &EvaluationReport, reduction: Option<&ReductionReport>) -> String {
    let mut s = String::from("bus,income_class,elsi,reduction_pct,avg_load_mw\n");
    for b in net.buses() {
        let i = b.id - 1;
        let red = reduction.map_or(String::new(), |r| format!("{}", r.buses[i].reduction_pct));
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            b.id,
            b.income_class.as_str(),
            report.elsi[i],
            red,
            report.avg_load_mw[i]
        );
    }
    s
}

/// One row of the E-sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub plan: String,
    /// Uniform equity criterion; infinite for the reference case.
    #[serde(serialize_with = "ser_e")]
    pub e: Option<f64>,
    pub expected_cost: f64,
    pub equity_cost: f64,
    pub equity_cost_ratio: f64,
}

fn ser_e<S: serde::Serializer>(e: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_str(&fmt_e(*e)),
        None => s.serialize_none(),
    }
}

pub fn fmt_e(e: f64) -> String {
    if e.is_infinite() {
        "inf".into()
    } else {
        format!("{e}")
    }
}

/// `plan,E,expected_cost,equity_cost,equity_cost_ratio`.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("plan,E,expected_cost,equity_cost,equity_cost_ratio\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.plan,
            r.e.map(fmt_e).unwrap_or_default(),
            r.expected_cost,
            r.equity_cost,
            r.equity_cost_ratio
        );
    }
    s
}

/// Human-readable digest of a report.
pub fn describe(net: &Network, report: &EvaluationReport) -> String {
    let mut s = String::new();
    let units = report.plan.units();
    let _ = writeln!(s, "plan: {} unit(s), {:.1} MW", units.len(), report.plan.total_mw());
    for (b, p) in &units {
        let _ = writeln!(s, "  bus {b:>3}: {p} MW ({})", net.bus(*b).income_class.as_str());
    }
    let _ = writeln!(
        s,
        "test scenarios: {} (fingerprint {})",
        report.per_scenario.len(),
        report.fingerprint
    );
    let _ = writeln!(s, "expected unserved energy: {:.4} MWh", report.total_shed_mwh);
    let _ = writeln!(s, "expected unserved cost: ${:.2}", report.expected_unserved_cost);
    let worst = report
        .elsi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, e)| (i + 1, *e));
    if let Some((b, e)) = worst {
        let _ = writeln!(s, "largest ELSI: {e:.4} at bus {b}");
    }
    if !report.failed.is_empty() {
        let _ = writeln!(s, "skipped scenarios: {}", report.failed.len());
    }
    s
}
