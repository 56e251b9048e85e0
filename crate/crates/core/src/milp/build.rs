//! Deterministic-equivalent assembly: first-stage investment, per-scenario
//! reconfiguration and dispatch, equity rows and the composite objective.

use std::collections::BTreeSet;

use super::extract::{DispatchSolution, DispatchStep};
use super::model::{key, LinExpr, MilpModel, Sense, VarId, VarKind};
use super::problem::{Plan, PlanningProblem};
use crate::error::Result;
use crate::netmodel::{structural_islands, BusId, IslandPartition};
use crate::scengen::Scenario;

/// Handles of the first-stage variables, indexed by bus − 1.
#[derive(Debug, Clone, Default)]
pub struct FirstStageVars {
    pub k: Vec<Option<VarId>>,
    pub n: Vec<Option<VarId>>,
    pub eps: Vec<Option<VarId>>,
}

/// How the second stage sees the investment decision.
#[derive(Debug, Clone, Copy)]
pub enum PlanInput<'a> {
    Vars(&'a FirstStageVars),
    Fixed(&'a Plan),
}

/// Variables of one interval; line vectors by line − 1, bus vectors by bus − 1.
#[derive(Debug, Clone)]
pub struct StepVars {
    pub t: usize,
    pub z: Vec<VarId>,
    pub flow: Vec<VarId>,
    pub pl: Vec<VarId>,
    pub ql: Vec<VarId>,
    pub v: Vec<VarId>,
    pub pg: Vec<Option<VarId>>,
    pub qg: Vec<Option<VarId>>,
    pub qc: Vec<Option<VarId>>,
    pub shedp: Vec<Option<VarId>>,
    /// Only for buses with reactive but no real demand.
    pub shedq: Vec<Option<VarId>>,
}

#[derive(Debug, Clone)]
pub struct SecondStageVars {
    pub scenario: usize,
    pub steps: Vec<StepVars>,
}

#[derive(Debug, Clone)]
pub struct DeterministicEquivalent {
    pub model: MilpModel,
    pub first: FirstStageVars,
    pub second: Vec<SecondStageVars>,
}

/// Big-M constants of one scenario (per-unit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    pub power: f64,
    pub voltage: f64,
}

/// M_p bounds any line flow: all demand plus every reactive source.
/// M_v covers the voltage band plus the largest drop M_p can cause.
pub fn big_m(prob: &PlanningProblem, scenario: &Scenario) -> BigM {
    let net = &prob.net;
    let h = prob.profile.horizon();
    let mut power = 0.0;
    for b in net.buses() {
        let peak = (0..h)
            .map(|t| {
                scenario
                    .demand_p(net, &prob.profile, b.id, t)
                    .max(scenario.demand_q(net, &prob.profile, b.id, t).abs())
            })
            .fold(0.0, f64::max);
        power += peak;
        if let Some(svc) = b.svc {
            power += svc.q_min.abs().max(svc.q_max.abs());
        }
    }
    let p_max_pu = prob.params.p_max / net.base_mva;
    let n_dg = prob.params.n_dg_max.min(net.n_buses()) as f64;
    power += n_dg * p_max_pu * (1.0 + prob.params.q_ratio()) + prob.params.dg_q_min.abs() / net.base_mva * n_dg;
    let rx = net.lines().iter().map(|l| l.r + l.x).fold(0.0, f64::max);
    BigM {
        power,
        voltage: (net.v_max - net.v_min) + rx * power / net.v0,
    }
}

pub fn build_first_stage(prob: &PlanningProblem, model: &mut MilpModel) -> Result<FirstStageVars> {
    let p = &prob.params;
    let net = &prob.net;
    let nmax = p.n_steps()? as f64;
    let n_bus = net.n_buses();
    let mut fs = FirstStageVars {
        k: vec![None; n_bus],
        n: vec![None; n_bus],
        eps: vec![None; n_bus],
    };
    let cands: Vec<BusId> = net.dg_candidates().into_iter().filter(|&b| b != 1).collect();
    for &i in &cands {
        let k = model.binary(key("k", &[i]))?;
        let n = model.add_var(key("n", &[i]), VarKind::Integer, 0.0, nmax)?;
        model.add_constraint(key("size", &[i]), LinExpr::term(n, 1.0).with(k, -nmax), Sense::Le, 0.0)?;
        fs.k[i - 1] = Some(k);
        fs.n[i - 1] = Some(n);
    }
    let mut count = LinExpr::new();
    let mut budget = LinExpr::new();
    for &i in &cands {
        let (k, n) = (fs.k[i - 1].unwrap(), fs.n[i - 1].unwrap());
        count.add(k, 1.0);
        budget.add(n, p.alpha_p * 1000.0 * p.size_step).add(k, p.alpha_e);
    }
    model.add_constraint("dg_count", count, Sense::Le, p.n_dg_max as f64)?;
    model.add_constraint("budget", budget, Sense::Le, p.budget)?;
    for b in net.buses() {
        if prob.equity[b.id - 1].is_finite() {
            let e = model.continuous(key("eps", &[b.id]), 0.0, f64::INFINITY)?;
            let w = if b.is_low_income() {
                p.gamma * p.low_income_gamma_factor
            } else {
                p.gamma
            };
            model.set_objective(e, w);
            fs.eps[b.id - 1] = Some(e);
        }
    }
    Ok(fs)
}

/// Adds every interval of `scenario`. The objective weight is the scenario's
/// probability.
pub fn build_second_stage(
    prob: &PlanningProblem,
    scenario: &Scenario,
    model: &mut MilpModel,
    plan: PlanInput<'_>,
) -> Result<SecondStageVars> {
    let times: Vec<usize> = (0..prob.profile.horizon()).collect();
    build_second_stage_at(prob, scenario, model, plan, &times)
}

/// Adds the listed intervals of `scenario` only. With a fixed plan the
/// intervals are independent, so each can be solved on its own.
pub fn build_second_stage_at(
    prob: &PlanningProblem,
    scenario: &Scenario,
    model: &mut MilpModel,
    plan: PlanInput<'_>,
    times: &[usize],
) -> Result<SecondStageVars> {
    second_stage(prob, scenario, model, plan, times, None)
}

/// Shed below this (MW) in a no-DG dispatch counts as none.
const SETTLED_TOL: f64 = 1e-9;

fn second_stage(
    prob: &PlanningProblem,
    scenario: &Scenario,
    model: &mut MilpModel,
    plan: PlanInput<'_>,
    times: &[usize],
    baseline: Option<&DispatchSolution>,
) -> Result<SecondStageVars> {
    let islands = structural_islands(&prob.net, &scenario.faults).map_err(|e| e.in_scenario(scenario.id))?;
    if let PlanInput::Fixed(p) = plan {
        p.validate(&prob.net, &prob.params)?;
    }
    let m = big_m(prob, scenario);
    let mut steps = Vec::with_capacity(times.len());
    for &t in times {
        let sv = add_interval(prob, scenario, &islands, m, model, plan, t)?;
        if let Some(d) = baseline.and_then(|b| b.steps.iter().find(|st| st.t == t)) {
            settle(prob, &islands, model, &sv, d);
        }
        steps.push(sv);
    }
    Ok(SecondStageVars {
        scenario: scenario.id,
        steps,
    })
}

fn add_interval(
    prob: &PlanningProblem,
    sc: &Scenario,
    islands: &IslandPartition,
    m: BigM,
    model: &mut MilpModel,
    plan: PlanInput<'_>,
    t: usize,
) -> Result<StepVars> {
    let net = &prob.net;
    let par = &prob.params;
    let s = sc.id;
    let base = net.base_mva;
    let n_bus = net.n_buses();
    let faulted: &BTreeSet<usize> = &sc.faults;
    let inf = f64::INFINITY;

    // variables
    let mut z = Vec::with_capacity(net.n_lines());
    let mut flow = Vec::with_capacity(net.n_lines());
    let mut pl = Vec::with_capacity(net.n_lines());
    let mut ql = Vec::with_capacity(net.n_lines());
    for l in net.lines() {
        let idx = [l.id, t, s];
        let out = faulted.contains(&l.id);
        let zv = model.add_var(key("z", &idx), VarKind::Binary, 0.0, if out { 0.0 } else { 1.0 })?;
        let c = islands.component_of(l.from_bus);
        let mf = if out {
            0.0
        } else {
            (islands.components[c].len() - 1) as f64
        };
        z.push(zv);
        flow.push(model.continuous(key("f", &idx), -mf, mf)?);
        let mp = if out { 0.0 } else { m.power };
        pl.push(model.continuous(key("pl", &idx), -mp, mp)?);
        ql.push(model.continuous(key("ql", &idx), -mp, mp)?);
    }
    let mut v = Vec::with_capacity(n_bus);
    for b in net.buses() {
        let (lo, hi) = if b.id == 1 {
            (net.v_sub, net.v_sub)
        } else {
            (net.v_min, net.v_max)
        };
        v.push(model.continuous(key("v", &[b.id, t, s]), lo, hi)?);
    }
    let mut pg = vec![None; n_bus];
    let mut qg = vec![None; n_bus];
    let q_lo = par.dg_q_min / base;
    for b in net.buses() {
        let i = b.id;
        let cap = match plan {
            PlanInput::Vars(fs) => fs.k[i - 1].map(|_| par.p_max / base),
            PlanInput::Fixed(p) => p.installed[i - 1].then(|| p.rated_mw[i - 1] / base),
        };
        if let Some(cap) = cap {
            let p_lo = match plan {
                PlanInput::Fixed(_) => (par.dg_p_min / base).min(cap),
                PlanInput::Vars(_) => 0.0,
            };
            pg[i - 1] = Some(model.continuous(key("pg", &[i, t, s]), p_lo, cap)?);
            qg[i - 1] = Some(model.continuous(key("qg", &[i, t, s]), q_lo, inf)?);
        }
    }
    let mut qc = vec![None; n_bus];
    for b in net.buses() {
        if let Some(svc) = b.svc {
            qc[b.id - 1] = Some(model.continuous(key("qc", &[b.id, t, s]), svc.q_min, svc.q_max)?);
        }
    }
    let mut shedp = vec![None; n_bus];
    let mut shedq = vec![None; n_bus];
    let pd: Vec<f64> = (1..=n_bus).map(|j| sc.demand_p(net, &prob.profile, j, t)).collect();
    let qd: Vec<f64> = (1..=n_bus).map(|j| sc.demand_q(net, &prob.profile, j, t)).collect();
    let cost = sc.prob * par.beta * 1000.0 * prob.profile.dt * base;
    for j in 2..=n_bus {
        if pd[j - 1] > 0.0 {
            let x = model.continuous(key("shedp", &[j, t, s]), 0.0, pd[j - 1])?;
            model.set_objective(x, cost);
            shedp[j - 1] = Some(x);
        } else if qd[j - 1] != 0.0 {
            let q = qd[j - 1];
            shedq[j - 1] = Some(model.continuous(key("shedq", &[j, t, s]), q.min(0.0), q.max(0.0))?);
        }
    }

    // radiality: each structural component with lines spans itself as a tree
    for (ci, comp) in islands.components.iter().enumerate() {
        if comp.len() < 2 {
            continue;
        }
        let root = if ci == islands.main_component { 1 } else { comp[0] };
        let mf = (comp.len() - 1) as f64;
        let mut count = LinExpr::new();
        for l in net.lines() {
            if !faulted.contains(&l.id) && islands.component_of(l.from_bus) == ci {
                count.add(z[l.id - 1], 1.0);
            }
        }
        model.add_constraint(key("rad", &[comp[0], t, s]), count, Sense::Eq, mf)?;
        for &b in comp {
            let mut e = LinExpr::new();
            for l in net.lines() {
                if faulted.contains(&l.id) {
                    continue;
                }
                if l.from_bus == b {
                    e.add(flow[l.id - 1], 1.0);
                } else if l.to_bus == b {
                    e.add(flow[l.id - 1], -1.0);
                }
            }
            let rhs = if b == root { mf } else { -1.0 };
            model.add_constraint(key("ff", &[b, t, s]), e, Sense::Eq, rhs)?;
        }
    }
    for l in net.lines() {
        if faulted.contains(&l.id) {
            continue;
        }
        let c = islands.component_of(l.from_bus);
        let mf = (islands.components[c].len() - 1) as f64;
        let (f, zv) = (flow[l.id - 1], z[l.id - 1]);
        let idx = [l.id, t, s];
        model.add_constraint(key("fcap+", &idx), LinExpr::term(f, 1.0).with(zv, -mf), Sense::Le, 0.0)?;
        model.add_constraint(key("fcap-", &idx), LinExpr::term(f, 1.0).with(zv, mf), Sense::Ge, 0.0)?;
    }

    // DG operating limits
    let qr = par.q_ratio();
    for i in 1..=n_bus {
        let (Some(p), Some(q)) = (pg[i - 1], qg[i - 1]) else {
            continue;
        };
        let idx = [i, t, s];
        if let PlanInput::Vars(fs) = plan {
            let (k, n) = (fs.k[i - 1].unwrap(), fs.n[i - 1].unwrap());
            model.add_constraint(
                key("pgmax", &idx),
                LinExpr::term(p, 1.0).with(n, -par.size_step / base),
                Sense::Le,
                0.0,
            )?;
            if par.dg_p_min > 0.0 {
                model.add_constraint(
                    key("pgmin", &idx),
                    LinExpr::term(p, 1.0).with(k, -par.dg_p_min / base),
                    Sense::Ge,
                    0.0,
                )?;
            }
            if par.dg_q_min < 0.0 {
                model.add_constraint(key("qgmin", &idx), LinExpr::term(q, 1.0).with(k, -q_lo), Sense::Ge, 0.0)?;
            }
        }
        model.add_constraint(key("qgmax", &idx), LinExpr::term(q, 1.0).with(p, -qr), Sense::Le, 0.0)?;
        // a unit in a sourceless island can only cover that island's demand
        if let PlanInput::Vars(fs) = plan {
            let c = islands.component_of(i);
            if c != islands.main_component {
                let demand: f64 = islands.components[c].iter().map(|&j| pd[j - 1]).sum();
                if demand < par.p_max / base {
                    let k = fs.k[i - 1].unwrap();
                    model.add_constraint(
                        key("pgisl", &idx),
                        LinExpr::term(p, 1.0).with(k, -demand),
                        Sense::Le,
                        0.0,
                    )?;
                }
            }
        }
    }

    // switched LinDistFlow voltage drop
    for l in net.lines() {
        if faulted.contains(&l.id) {
            continue;
        }
        let idx = [l.id, t, s];
        let e = LinExpr::term(v[l.from_bus - 1], 1.0)
            .with(v[l.to_bus - 1], -1.0)
            .with(pl[l.id - 1], -l.r / net.v0)
            .with(ql[l.id - 1], -l.x / net.v0);
        let zv = z[l.id - 1];
        model.add_constraint(key("vdrop+", &idx), e.clone().with(zv, m.voltage), Sense::Le, m.voltage)?;
        model.add_constraint(key("vdrop-", &idx), e.with(zv, -m.voltage), Sense::Ge, -m.voltage)?;
    }
    // DG buses off the main component act as island slack buses
    let main = islands.main_component;
    for i in 2..=n_bus {
        if islands.component_of(i) == main || pg[i - 1].is_none() {
            continue;
        }
        let idx = [i, t, s];
        match plan {
            PlanInput::Vars(fs) => {
                let k = fs.k[i - 1].unwrap();
                let vi = v[i - 1];
                model.add_constraint(
                    key("vslack+", &idx),
                    LinExpr::term(vi, 1.0).with(k, m.voltage),
                    Sense::Le,
                    net.v0 + m.voltage,
                )?;
                model.add_constraint(
                    key("vslack-", &idx),
                    LinExpr::term(vi, 1.0).with(k, -m.voltage),
                    Sense::Ge,
                    net.v0 - m.voltage,
                )?;
            }
            PlanInput::Fixed(_) => {
                model.add_constraint(key("vslack", &idx), LinExpr::term(v[i - 1], 1.0), Sense::Eq, net.v0)?;
            }
        }
    }

    // switched flow caps and the thermal hexagon
    let r3 = 3f64.sqrt();
    for l in net.lines() {
        if faulted.contains(&l.id) {
            continue;
        }
        let idx = [l.id, t, s];
        let (p, q, zv) = (pl[l.id - 1], ql[l.id - 1], z[l.id - 1]);
        let mp = m.power;
        model.add_constraint(key("pcap+", &idx), LinExpr::term(p, 1.0).with(zv, -mp), Sense::Le, 0.0)?;
        model.add_constraint(key("pcap-", &idx), LinExpr::term(p, 1.0).with(zv, mp), Sense::Ge, 0.0)?;
        model.add_constraint(key("qcap+", &idx), LinExpr::term(q, 1.0).with(zv, -mp), Sense::Le, 0.0)?;
        model.add_constraint(key("qcap-", &idx), LinExpr::term(q, 1.0).with(zv, mp), Sense::Ge, 0.0)?;
        let smax = l.s_max;
        for (tag, a, b, rhs) in [
            ("th1", r3, 1.0, 2.0 * smax),
            ("th2", 1.0, 0.0, smax),
            ("th3", r3, -1.0, 2.0 * smax),
        ] {
            let e = LinExpr::term(p, a).with(q, b);
            model.add_constraint(key(&format!("{tag}+"), &idx), e.clone(), Sense::Le, rhs)?;
            model.add_constraint(key(&format!("{tag}-"), &idx), e, Sense::Ge, -rhs)?;
        }
    }

    // nodal balance (bus 1 is the substation slack)
    for j in 2..=n_bus {
        let idx = [j, t, s];
        let mut ep = LinExpr::new();
        let mut eq = LinExpr::new();
        for l in net.lines() {
            if faulted.contains(&l.id) {
                continue;
            }
            let sign = if l.from_bus == j {
                1.0
            } else if l.to_bus == j {
                -1.0
            } else {
                continue;
            };
            ep.add(pl[l.id - 1], sign);
            eq.add(ql[l.id - 1], sign);
        }
        if let Some(p) = pg[j - 1] {
            ep.add(p, -1.0);
        }
        if let Some(q) = qg[j - 1] {
            eq.add(q, -1.0);
        }
        if let Some(q) = qc[j - 1] {
            eq.add(q, -1.0);
        }
        if let Some(x) = shedp[j - 1] {
            ep.add(x, -1.0);
            eq.add(x, -qd[j - 1] / pd[j - 1]);
        }
        if let Some(x) = shedq[j - 1] {
            eq.add(x, -1.0);
        }
        model.add_constraint(key("balp", &idx), ep, Sense::Eq, -pd[j - 1])?;
        model.add_constraint(key("balq", &idx), eq, Sense::Eq, -qd[j - 1])?;
    }

    Ok(StepVars {
        t,
        z,
        flow,
        pl,
        ql,
        v,
        pg,
        qg,
        qc,
        shedp,
        shedq,
    })
}

/// Per component: does the no-DG step `d` serve all of its demand?
pub(crate) fn settled_components(islands: &IslandPartition, d: &DispatchStep) -> Vec<bool> {
    islands
        .components
        .iter()
        .map(|comp| {
            comp.iter()
                .all(|&b| d.shed_p[b - 1].abs() <= SETTLED_TOL && d.shed_q[b - 1].abs() <= SETTLED_TOL)
        })
        .collect()
}

/// Components that a no-DG dispatch serves in full stay served under any
/// plan (units can idle), so their switches are pinned to that dispatch and
/// their shed to zero. Needs `dg_p_min = 0`.
fn settle(prob: &PlanningProblem, islands: &IslandPartition, model: &mut MilpModel, sv: &StepVars, d: &DispatchStep) {
    if prob.params.dg_p_min != 0.0 {
        return;
    }
    let settled = settled_components(islands, d);
    for (comp, _) in islands.components.iter().zip(&settled).filter(|(_, &s)| s) {
        for &b in comp {
            for x in [sv.shedp[b - 1], sv.shedq[b - 1]].into_iter().flatten() {
                model.set_bounds(x, 0.0, 0.0);
            }
        }
        let c = islands.component_of(comp[0]);
        for l in prob.net.lines() {
            if islands.component_of(l.from_bus) == c {
                let z = if d.closed[l.id - 1] { 1.0 } else { 0.0 };
                model.set_bounds(sv.z[l.id - 1], z, z);
            }
        }
    }
}

pub fn build_deterministic_equivalent(prob: &PlanningProblem) -> Result<DeterministicEquivalent> {
    build_deterministic_equivalent_with(prob, None)
}

/// As [`build_deterministic_equivalent`], optionally tightened by a no-DG
/// dispatch of every scenario (same order). The optimum is unchanged.
pub fn build_deterministic_equivalent_with(
    prob: &PlanningProblem,
    baseline: Option<&[DispatchSolution]>,
) -> Result<DeterministicEquivalent> {
    prob.validate()?;
    if let Some(b) = baseline {
        if b.len() != prob.scenarios.len() || b.iter().zip(&prob.scenarios.scenarios).any(|(d, s)| d.scenario != s.id) {
            return Err(crate::Error::InvalidArgument(
                "baseline dispatch does not match the scenario set".into(),
            ));
        }
    }
    let mut model = MilpModel::new("dgplan");
    let first = build_first_stage(prob, &mut model)?;
    let mut second = Vec::with_capacity(prob.scenarios.len());
    let times: Vec<usize> = (0..prob.profile.horizon()).collect();
    for (s, sc) in prob.scenarios.scenarios.iter().enumerate() {
        let b = baseline.map(|b| &b[s]);
        second.push(second_stage(prob, sc, &mut model, PlanInput::Vars(&first), &times, b)?);
    }
    // equity rows: Σ_s ρ_s Σ_t ΔP/P^D − ε_i ≤ e*_i
    let net = &prob.net;
    for b in net.buses() {
        let i = b.id;
        let Some(eps) = first.eps[i - 1] else { continue };
        let mut e = LinExpr::new();
        for (sc, sv) in prob.scenarios.scenarios.iter().zip(&second) {
            for st in &sv.steps {
                if let Some(x) = st.shedp[i - 1] {
                    e.add(x, sc.prob / sc.demand_p(net, &prob.profile, i, st.t));
                }
            }
        }
        if e.terms.is_empty() {
            continue;
        }
        e.add(eps, -1.0);
        model.add_constraint(key("eec", &[i]), e, Sense::Le, prob.equity[i - 1])?;
    }
    Ok(DeterministicEquivalent { model, first, second })
}
