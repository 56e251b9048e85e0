//! Complete feasible points of the deterministic equivalent, assembled from
//! fixed-plan dispatches and handed to the solver as a warm start.

use std::collections::VecDeque;

use super::build::{settled_components, DeterministicEquivalent};
use super::extract::{DispatchSolution, DispatchStep};
use super::model::VarId;
use super::problem::{Plan, PlanningProblem};
use crate::error::{Error, Result};
use crate::netmodel::{structural_islands, IslandPartition};

/// Values for every variable of `de` given `plan` and its dispatch.
/// `baseline` must be the no-DG dispatch `de` was built with, if any;
/// components it settled take its values.
pub fn planning_start(
    prob: &PlanningProblem,
    de: &DeterministicEquivalent,
    plan: &Plan,
    dispatch: &[DispatchSolution],
    baseline: Option<&[DispatchSolution]>,
) -> Result<Vec<f64>> {
    let net = &prob.net;
    let base = net.base_mva;
    let model = &de.model;
    if dispatch.len() != de.second.len() {
        return Err(Error::InvalidArgument(
            "dispatch does not match the scenario set".into(),
        ));
    }
    let mut x = vec![0.0; model.n_vars()];
    let mut set = |v: Option<VarId>, val: f64| {
        if let Some(v) = v {
            x[v.0] = val;
        }
    };
    for i in 0..net.n_buses() {
        set(de.first.k[i], if plan.installed[i] { 1.0 } else { 0.0 });
        let steps = if plan.installed[i] {
            (plan.rated_mw[i] / prob.params.size_step).round()
        } else {
            0.0
        };
        set(de.first.n[i], steps);
    }
    let mut ratio = vec![0.0; net.n_buses()];
    for (s, (sc, sv)) in prob.scenarios.scenarios.iter().zip(&de.second).enumerate() {
        let islands = structural_islands(net, &sc.faults)?;
        for (k, vars) in sv.steps.iter().enumerate() {
            let d = &dispatch[s].steps[k];
            let b = baseline.map(|b| &b[s].steps[k]);
            let settled = match b {
                Some(b) if prob.params.dg_p_min == 0.0 => settled_components(&islands, b),
                _ => vec![false; islands.len()],
            };
            let src = |bus: usize| -> &DispatchStep {
                match b {
                    Some(b) if settled[islands.component_of(bus)] => b,
                    _ => d,
                }
            };
            let mut closed = vec![false; net.n_lines()];
            for l in net.lines() {
                let st = src(l.from_bus);
                let i = l.id - 1;
                closed[i] = st.closed[i];
                set(Some(vars.z[i]), if st.closed[i] { 1.0 } else { 0.0 });
                set(Some(vars.pl[i]), st.pline[i] / base);
                set(Some(vars.ql[i]), st.qline[i] / base);
            }
            for (i, f) in tree_flows(prob, &islands, &closed).into_iter().enumerate() {
                set(Some(vars.flow[i]), f);
            }
            for bus in net.buses() {
                let j = bus.id - 1;
                let st = src(bus.id);
                set(Some(vars.v[j]), st.v[j]);
                set(vars.pg[j], st.pg[j] / base);
                set(vars.qg[j], st.qg[j] / base);
                set(vars.qc[j], st.qc[j] / base);
                set(vars.shedp[j], st.shed_p[j] / base);
                set(vars.shedq[j], st.shed_q[j] / base);
                let pd = sc.demand_p(net, &prob.profile, bus.id, vars.t);
                if pd > 0.0 {
                    ratio[j] += sc.prob * st.shed_p[j] / base / pd;
                }
            }
        }
    }
    for i in 0..net.n_buses() {
        set(de.first.eps[i], (ratio[i] - prob.equity[i]).max(0.0));
    }
    for (v, val) in model.vars().iter().zip(x.iter_mut()) {
        *val = val.clamp(v.lower, v.upper);
    }
    Ok(x)
}

/// Single-commodity flows of a spanning forest: each non-root bus consumes
/// one unit, sent from its component's root along closed lines.
fn tree_flows(prob: &PlanningProblem, islands: &IslandPartition, closed: &[bool]) -> Vec<f64> {
    let net = &prob.net;
    let n = net.n_buses();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + 1];
    for l in net.lines() {
        if closed[l.id - 1] {
            adj[l.from_bus].push((l.to_bus, l.id));
            adj[l.to_bus].push((l.from_bus, l.id));
        }
    }
    let mut flow = vec![0.0; net.n_lines()];
    for (ci, comp) in islands.components.iter().enumerate() {
        let root = if ci == islands.main_component { 1 } else { comp[0] };
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + 1];
        let mut seen = vec![false; n + 1];
        let mut order = Vec::with_capacity(comp.len());
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(w, l) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((u, l));
                    queue.push_back(w);
                }
            }
        }
        let mut sub = vec![1.0; n + 1];
        for &u in order.iter().rev() {
            if let Some((p, l)) = parent[u] {
                sub[p] += sub[u];
                let line = &net.lines()[l - 1];
                flow[l - 1] = if line.from_bus == p { sub[u] } else { -sub[u] };
            }
        }
    }
    flow
}
