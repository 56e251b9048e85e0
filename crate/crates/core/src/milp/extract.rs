//! Reading plans and dispatch back out of solver values, and checking the
//! physics of a dispatch independently of the model rows.

use std::collections::BTreeSet;

use serde::Serialize;

use super::build::{DeterministicEquivalent, FirstStageVars, SecondStageVars};
use super::model::{MilpModel, VarId};
use super::problem::{Plan, PlanningProblem};
use crate::error::{Error, Result};
use crate::netmodel::{check_radial, structural_islands};
use crate::scengen::Scenario;
use crate::solver::{self, Solution, SolveOptions, SolveStatus};

const INT_TOL: f64 = 1e-6;

/// Operating point of one interval. Powers in MW/MVar, voltages in p.u.;
/// line vectors by line − 1, bus vectors by bus − 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchStep {
    pub t: usize,
    pub closed: Vec<bool>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    pub qc: Vec<f64>,
    pub v: Vec<f64>,
    pub pline: Vec<f64>,
    pub qline: Vec<f64>,
    pub shed_p: Vec<f64>,
    pub shed_q: Vec<f64>,
}

impl DispatchStep {
    pub fn closed_set(&self) -> BTreeSet<usize> {
        (0..self.closed.len())
            .filter(|&i| self.closed[i])
            .map(|i| i + 1)
            .collect()
    }

    pub fn total_shed_mw(&self) -> f64 {
        self.shed_p.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchSolution {
    pub scenario: usize,
    pub steps: Vec<DispatchStep>,
}

impl DispatchSolution {
    pub fn total_shed_mwh(&self, dt: f64) -> f64 {
        self.steps.iter().map(|s| s.total_shed_mw() * dt).sum()
    }
}

fn integral(model: &MilpModel, values: &[f64], v: VarId) -> Result<f64> {
    let x = values[v.0];
    let r = (x - x.round()).abs();
    if !(r <= INT_TOL) {
        return Err(Error::Integrality {
            name: model.var(v).name.clone(),
            residual: r,
        });
    }
    Ok(x.round())
}

pub fn extract_plan(prob: &PlanningProblem, model: &MilpModel, values: &[f64], fs: &FirstStageVars) -> Result<Plan> {
    let mut plan = Plan::empty(prob.net.n_buses());
    for i in 0..plan.n_buses() {
        let (Some(k), Some(n)) = (fs.k[i], fs.n[i]) else {
            continue;
        };
        let k = integral(model, values, k)?;
        let n = integral(model, values, n)?;
        plan.installed[i] = k == 1.0;
        plan.rated_mw[i] = prob.params.rating(n.max(0.0) as usize);
    }
    plan.validate(&prob.net, &prob.params)?;
    Ok(plan)
}

pub fn extract_dispatch(
    prob: &PlanningProblem,
    scenario: &Scenario,
    model: &MilpModel,
    values: &[f64],
    sv: &SecondStageVars,
) -> Result<DispatchSolution> {
    let net = &prob.net;
    let base = net.base_mva;
    let val = |v: Option<VarId>| v.map_or(0.0, |v| values[v.0] * base);
    let mut steps = Vec::with_capacity(sv.steps.len());
    for st in &sv.steps {
        let mut closed = Vec::with_capacity(st.z.len());
        for &z in &st.z {
            closed.push(integral(model, values, z)? == 1.0);
        }
        let n = net.n_buses();
        let mut shed_q = vec![0.0; n];
        for j in 1..=n {
            if let Some(x) = st.shedp[j - 1] {
                let pd = scenario.demand_p(net, &prob.profile, j, st.t);
                let qd = scenario.demand_q(net, &prob.profile, j, st.t);
                shed_q[j - 1] = values[x.0] * qd / pd * base;
            } else {
                shed_q[j - 1] = val(st.shedq[j - 1]);
            }
        }
        let shed_p: Vec<f64> = st.shedp.iter().map(|&x| val(x).max(0.0)).collect();
        let d = DispatchStep {
            t: st.t,
            closed,
            pg: st.pg.iter().map(|&x| val(x)).collect(),
            qg: st.qg.iter().map(|&x| val(x)).collect(),
            qc: st.qc.iter().map(|&x| val(x)).collect(),
            v: st.v.iter().map(|&x| values[x.0]).collect(),
            pline: st.pl.iter().map(|&x| values[x.0] * base).collect(),
            qline: st.ql.iter().map(|&x| values[x.0] * base).collect(),
            shed_p,
            shed_q,
        };
        if d.v.iter().chain(&d.pline).chain(&d.shed_p).any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "scenario {}: non-finite dispatch value",
                scenario.id
            )));
        }
        steps.push(d);
    }
    Ok(DispatchSolution {
        scenario: scenario.id,
        steps,
    })
}

/// A failed physics check on an extracted dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsViolation {
    pub check: &'static str,
    pub at: String,
    pub amount: f64,
}

/// Re-derives every operating constraint from network data and reports
/// residuals above `tol` (per-unit for powers).
pub fn physics_residuals(
    prob: &PlanningProblem,
    scenario: &Scenario,
    plan: &Plan,
    d: &DispatchSolution,
    tol: f64,
) -> Vec<PhysicsViolation> {
    let mut out = Vec::new();
    for st in &d.steps {
        step_residuals(prob, scenario, plan, st, tol, &mut out);
    }
    out
}

pub(crate) fn step_residuals(
    prob: &PlanningProblem,
    scenario: &Scenario,
    plan: &Plan,
    st: &DispatchStep,
    tol: f64,
    out: &mut Vec<PhysicsViolation>,
) {
    let net = &prob.net;
    let base = net.base_mva;
    let par = &prob.params;
    let mut flag = |check: &'static str, at: &dyn Fn() -> String, amount: f64| {
        if !(amount <= tol) {
            out.push(PhysicsViolation {
                check,
                at: at(),
                amount,
            });
        }
    };
    let qr = par.q_ratio();
    let t = st.t;
    let closed = st.closed_set();
    let rc = check_radial(net, &closed);
    flag("radial", &|| format!("t={t}"), if rc.radial { 0.0 } else { 1.0 });
    for f in &scenario.faults {
        flag(
            "faulted-closed",
            &|| format!("line {f} t={t}"),
            if closed.contains(f) { 1.0 } else { 0.0 },
        );
    }
    let mut netp = vec![0.0; net.n_buses() + 1];
    let mut netq = vec![0.0; net.n_buses() + 1];
    let r3 = 3f64.sqrt();
    for l in net.lines() {
        let i = l.id - 1;
        let (p, q) = (st.pline[i] / base, st.qline[i] / base);
        netp[l.from_bus] += p;
        netp[l.to_bus] -= p;
        netq[l.from_bus] += q;
        netq[l.to_bus] -= q;
        let at = || format!("line {} t={t}", l.id);
        if st.closed[i] {
            let drop = st.v[l.from_bus - 1] - st.v[l.to_bus - 1] - (l.r * p + l.x * q) / net.v0;
            flag("vdrop", &at, drop.abs());
        } else {
            flag("open-flow", &at, p.abs().max(q.abs()));
        }
        let s = l.s_max;
        let over = [(r3 * p + q).abs() - 2.0 * s, p.abs() - s, (r3 * p - q).abs() - 2.0 * s];
        flag("thermal", &at, over.iter().cloned().fold(0.0, f64::max));
    }
    flag("v-sub", &|| format!("t={t}"), (st.v[0] - net.v_sub).abs());
    if let Ok(islands) = structural_islands(net, &scenario.faults) {
        for (i, _) in plan.units() {
            if islands.component_of(i) != islands.main_component {
                flag("v-slack", &|| format!("bus {i} t={t}"), (st.v[i - 1] - net.v0).abs());
            }
        }
    }
    for b in net.buses() {
        let j = b.id;
        let at = || format!("bus {j} t={t}");
        let vj = st.v[j - 1];
        flag("v-bounds", &at, (net.v_min - vj).max(vj - net.v_max).max(0.0));
        let pd = scenario.demand_p(net, &prob.profile, j, t);
        let qd = scenario.demand_q(net, &prob.profile, j, t);
        let sp = st.shed_p[j - 1] / base;
        let sq = st.shed_q[j - 1] / base;
        flag("shed-bounds", &at, (-sp).max(sp - pd).max(0.0));
        if pd > 0.0 {
            flag("shed-q", &at, (sq - qd / pd * sp).abs());
        }
        let (pg, qg, qc) = (st.pg[j - 1] / base, st.qg[j - 1] / base, st.qc[j - 1] / base);
        if plan.installed[j - 1] {
            let cap = plan.rated_mw[j - 1] / base;
            let lo = (par.dg_p_min / base).min(cap);
            flag("dg-p", &at, (lo - pg).max(pg - cap).max(0.0));
            flag("dg-q", &at, (qg - qr * pg).max(par.dg_q_min / base - qg).max(0.0));
        } else {
            flag("dg-p", &at, pg.abs().max(qg.abs()));
        }
        if let Some(svc) = b.svc {
            flag("svc", &at, (svc.q_min - qc).max(qc - svc.q_max).max(0.0));
        } else {
            flag("svc", &at, qc.abs());
        }
        if j == 1 {
            continue;
        }
        flag("balance-p", &at, (netp[j] - (pg - (pd - sp))).abs());
        flag("balance-q", &at, (netq[j] - (qg + qc - (qd - sq))).abs());
    }
}

/// Per-bus Σ_t ΔP/P^D of one scenario (hours with no demand count 0).
pub fn shed_ratios(prob: &PlanningProblem, scenario: &Scenario, d: &DispatchSolution) -> Vec<f64> {
    let net = &prob.net;
    let mut e = vec![0.0; net.n_buses()];
    for st in &d.steps {
        for j in 1..=net.n_buses() {
            let pd = scenario.demand_p(net, &prob.profile, j, st.t) * net.base_mva;
            if pd > 0.0 {
                e[j - 1] += st.shed_p[j - 1] / pd;
            }
        }
    }
    e
}

/// Expected unserved cost ($) of a set of dispatches weighted by scenario
/// probability.
pub fn unserved_cost(prob: &PlanningProblem, dispatch: &[DispatchSolution]) -> f64 {
    let p = &prob.params;
    prob.scenarios
        .scenarios
        .iter()
        .zip(dispatch)
        .map(|(sc, d)| sc.prob * p.beta * 1000.0 * d.total_shed_mwh(prob.profile.dt))
        .sum()
}

#[derive(Debug, Clone)]
pub struct PlanningOutcome {
    pub status: SolveStatus,
    pub plan: Plan,
    pub objective: f64,
    pub unserved_cost: f64,
    pub equity_penalty: f64,
    /// ε_i by bus − 1 (0 where the bus has no equity row).
    pub eps: Vec<f64>,
    /// Training-set ELSI by bus − 1.
    pub elsi: Vec<f64>,
    pub dispatch: Vec<DispatchSolution>,
    pub solution: Solution,
}

/// Reads everything of interest out of a solved deterministic equivalent.
pub fn read_outcome(
    prob: &PlanningProblem,
    de: &DeterministicEquivalent,
    solution: Solution,
) -> Result<PlanningOutcome> {
    let values = solution.require_values()?;
    let plan = extract_plan(prob, &de.model, values, &de.first)?;
    let mut dispatch = Vec::with_capacity(de.second.len());
    let mut elsi = vec![0.0; prob.net.n_buses()];
    for (sc, sv) in prob.scenarios.scenarios.iter().zip(&de.second) {
        let d = extract_dispatch(prob, sc, &de.model, values, sv)?;
        for (e, r) in elsi.iter_mut().zip(shed_ratios(prob, sc, &d)) {
            *e += sc.prob * r;
        }
        dispatch.push(d);
    }
    let eps: Vec<f64> = de
        .first
        .eps
        .iter()
        .map(|e| e.map_or(0.0, |v| values[v.0].max(0.0)))
        .collect();
    let p = &prob.params;
    let equity_penalty = prob
        .net
        .buses()
        .iter()
        .map(|b| {
            let w = if b.is_low_income() {
                p.gamma * p.low_income_gamma_factor
            } else {
                p.gamma
            };
            w * eps[b.id - 1]
        })
        .sum();
    let unserved = unserved_cost(prob, &dispatch);
    Ok(PlanningOutcome {
        status: solution.status,
        plan,
        objective: solution.objective.unwrap_or(f64::NAN),
        unserved_cost: unserved,
        equity_penalty,
        eps,
        elsi,
        dispatch,
        solution,
    })
}

/// Builds, solves and reads back the deterministic equivalent.
pub fn solve_planning(prob: &PlanningProblem, opts: &SolveOptions) -> Result<PlanningOutcome> {
    solve_planning_from(prob, opts, &[])
}

/// As [`solve_planning`]. A no-DG dispatch of the scenarios first pins the
/// components it fully serves (an exact tightening), then the best of the
/// empty plan and `candidates` seeds the solver.
pub fn solve_planning_from(
    prob: &PlanningProblem,
    opts: &SolveOptions,
    candidates: &[Plan],
) -> Result<PlanningOutcome> {
    prob.validate()?;
    let dispatch_all = |plan: &Plan| -> Result<Vec<DispatchSolution>> {
        super::dispatch_fixed_plan(prob, plan, &prob.scenarios.scenarios, opts, true)
            .into_iter()
            .collect()
    };
    let empty = Plan::empty(prob.net.n_buses());
    let baseline = match dispatch_all(&empty) {
        Ok(b) => Some(b),
        Err(e) => {
            log::warn!("no baseline dispatch, solving the plain model: {e}");
            None
        }
    };
    let de = super::build_deterministic_equivalent_with(prob, baseline.as_deref())?;
    log::info!(
        "planning model: {} vars ({} integral), {} rows, {} nonzeros",
        de.model.n_vars(),
        de.model.n_integral(),
        de.model.n_constraints(),
        de.model.n_nonzeros()
    );
    let mut start: Option<(f64, Vec<f64>)> = None;
    if let Some(b) = &baseline {
        let mut tried: Vec<&Plan> = Vec::new();
        for plan in std::iter::once(&empty).chain(candidates) {
            if tried.contains(&plan) || plan.validate(&prob.net, &prob.params).is_err() {
                continue;
            }
            tried.push(plan);
            let d = if plan == &empty {
                Ok(b.clone())
            } else {
                dispatch_all(plan)
            };
            let x = d.and_then(|d| super::start::planning_start(prob, &de, plan, &d, Some(b)));
            match x {
                Ok(x) => {
                    let obj = de.model.objective_value(&x);
                    log::debug!("start {:?}: objective {obj}", plan.units());
                    if start.as_ref().is_none_or(|(best, _)| obj < *best) {
                        start = Some((obj, x));
                    }
                }
                Err(e) => log::debug!("start {:?} skipped: {e}", plan.units()),
            }
        }
    }
    let sol = solver::solve_from(&de.model, opts, start.as_ref().map(|(_, x)| x.as_slice()))?;
    match sol.status {
        SolveStatus::Infeasible => return Err(Error::Infeasible("planning model has no feasible solution".into())),
        SolveStatus::Unbounded => return Err(Error::Solver("planning model is unbounded".into())),
        _ => {}
    }
    read_outcome(prob, &de, sol)
}
