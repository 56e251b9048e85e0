//! Exact shortcut for fixed-plan intervals.
//!
//! With the plan fixed, any bus in a structural component without DG
//! capacity must be shed in full, and no other bus needs to be. If a radial
//! configuration serves everything else within all limits, it is optimal and
//! no MILP is needed. Otherwise the caller falls back to a solve.

use std::collections::VecDeque;

use super::extract::{step_residuals, DispatchStep};
use super::problem::{Plan, PlanningProblem};
use crate::netmodel::{structural_islands, IslandPartition, LineId};
use crate::scengen::Scenario;

const TOL: f64 = 1e-9;

/// Minimum total shed (MW) of an interval under a fixed plan.
pub fn forced_shed_mw(
    prob: &PlanningProblem,
    scenario: &Scenario,
    plan: &Plan,
    islands: &IslandPartition,
    t: usize,
) -> f64 {
    let net = &prob.net;
    let mut total = 0.0;
    for (ci, comp) in islands.components.iter().enumerate() {
        if ci == islands.main_component {
            continue;
        }
        let cap: f64 = comp
            .iter()
            .map(|&b| {
                if plan.installed[b - 1] {
                    plan.rated_mw[b - 1]
                } else {
                    0.0
                }
            })
            .sum();
        if cap == 0.0 {
            total += comp
                .iter()
                .map(|&b| scenario.demand_p(net, &prob.profile, b, t))
                .sum::<f64>()
                * net.base_mva;
        }
    }
    total
}

#[derive(Clone, Copy)]
enum SvcMode {
    Local,
    Max,
}

/// A provably optimal dispatch for interval `t`, or `None` when the cheap
/// construction does not verify.
pub fn screen_interval(prob: &PlanningProblem, scenario: &Scenario, plan: &Plan, t: usize) -> Option<DispatchStep> {
    let islands = structural_islands(&prob.net, &scenario.faults).ok()?;
    for prefer_ties in [false, true] {
        for svc in [SvcMode::Local, SvcMode::Max] {
            for dg_local in [false, true] {
                if let Some(st) = candidate(prob, scenario, plan, &islands, t, prefer_ties, svc, dg_local) {
                    let mut v = Vec::new();
                    step_residuals(prob, scenario, plan, &st, TOL, &mut v);
                    if v.is_empty() {
                        return Some(st);
                    }
                }
            }
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn candidate(
    prob: &PlanningProblem,
    sc: &Scenario,
    plan: &Plan,
    islands: &IslandPartition,
    t: usize,
    prefer_ties: bool,
    svc: SvcMode,
    dg_local: bool,
) -> Option<DispatchStep> {
    let net = &prob.net;
    let base = net.base_mva;
    let n = net.n_buses();
    let qr = prob.params.q_ratio();
    // work in per-unit, convert at the end
    let pd: Vec<f64> = (1..=n).map(|j| sc.demand_p(net, &prob.profile, j, t)).collect();
    let qd: Vec<f64> = (1..=n).map(|j| sc.demand_q(net, &prob.profile, j, t)).collect();
    let cap: Vec<f64> = (0..n)
        .map(|i| {
            if plan.installed[i] {
                plan.rated_mw[i] / base
            } else {
                0.0
            }
        })
        .collect();
    let p_lo: Vec<f64> = (0..n)
        .map(|i| {
            if plan.installed[i] {
                (prob.params.dg_p_min / base).min(cap[i])
            } else {
                0.0
            }
        })
        .collect();
    let q_lo = prob.params.dg_q_min / base;

    let mut st = DispatchStep {
        t,
        closed: vec![false; net.n_lines()],
        pg: vec![0.0; n],
        qg: vec![0.0; n],
        qc: vec![0.0; n],
        v: vec![net.v0; n],
        pline: vec![0.0; net.n_lines()],
        qline: vec![0.0; net.n_lines()],
        shed_p: vec![0.0; n],
        shed_q: vec![0.0; n],
    };

    // spanning forest, one tree per structural component
    let mut order: Vec<&crate::netmodel::Line> = net.lines().iter().filter(|l| !sc.faults.contains(&l.id)).collect();
    order.sort_by_key(|l| (l.is_tie() != prefer_ties, l.id));
    let mut uf = crate::netmodel::UnionFind::new(n);
    let mut adj: Vec<Vec<(usize, LineId)>> = vec![Vec::new(); n + 1];
    for l in order {
        if uf.union(l.from_bus, l.to_bus) {
            st.closed[l.id - 1] = true;
            adj[l.from_bus].push((l.to_bus, l.id));
            adj[l.to_bus].push((l.from_bus, l.id));
        }
    }

    for (ci, comp) in islands.components.iter().enumerate() {
        let main = ci == islands.main_component;
        let sources: Vec<usize> = comp.iter().copied().filter(|&b| plan.installed[b - 1]).collect();
        let comp_cap: f64 = sources.iter().map(|&b| cap[b - 1]).sum();
        let root = if main {
            1
        } else if comp_cap == 0.0 {
            // no source: everything is shed, no flow, any in-band voltage
            for &b in comp {
                st.shed_p[b - 1] = pd[b - 1];
                st.shed_q[b - 1] = qd[b - 1];
                if let Some(s) = net.bus(b).svc {
                    st.qc[b - 1] = 0f64.clamp(s.q_min, s.q_max);
                }
                if plan.installed[b - 1] {
                    // zero-rated unit anchors the island
                    st.v[b - 1] = net.v0;
                }
            }
            continue;
        } else if sources.len() == 1 {
            sources[0]
        } else {
            return None;
        };

        // local injections
        for &b in comp {
            let i = b - 1;
            if let Some(s) = net.bus(b).svc {
                st.qc[i] = match svc {
                    SvcMode::Local => qd[i].clamp(s.q_min, s.q_max),
                    SvcMode::Max => s.q_max,
                };
            }
            if plan.installed[i] && b != root {
                let p = if dg_local {
                    pd[i].clamp(p_lo[i], cap[i])
                } else {
                    p_lo[i]
                };
                st.pg[i] = p;
                let want = if dg_local { qd[i] - st.qc[i] } else { 0.0 };
                st.qg[i] = want.clamp(q_lo, qr * p);
            }
        }
        // BFS from the root
        let mut parent: Vec<Option<(usize, LineId)>> = vec![None; n + 1];
        let mut seen = vec![false; n + 1];
        let mut bfs = Vec::with_capacity(comp.len());
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            bfs.push(u);
            for &(w, l) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((u, l));
                    queue.push_back(w);
                }
            }
        }
        if bfs.len() != comp.len() {
            return None;
        }
        // subtree net demand, leaves first
        let mut sub_p = vec![0.0; n + 1];
        let mut sub_q = vec![0.0; n + 1];
        for &b in bfs.iter().rev() {
            let i = b - 1;
            sub_p[b] += pd[i] - st.pg[i];
            sub_q[b] += qd[i] - st.qg[i] - st.qc[i];
            if let Some((u, l)) = parent[b] {
                let (p, q) = (sub_p[b], sub_q[b]);
                sub_p[u] += p;
                sub_q[u] += q;
                let line = net.line(l).ok()?;
                let sign = if line.from_bus == u { 1.0 } else { -1.0 };
                st.pline[l - 1] = sign * p;
                st.qline[l - 1] = sign * q;
            }
        }
        if !main {
            let i = root - 1;
            let p = sub_p[root] + st.pg[i];
            let q = sub_q[root] + st.qg[i];
            if p < p_lo[i] - TOL || p > cap[i] + TOL || q > qr * p + TOL || q < q_lo - TOL {
                return None;
            }
            st.pg[i] = p;
            st.qg[i] = q;
        }
        // voltages root-down
        st.v[root - 1] = if main { net.v_sub } else { net.v0 };
        for &b in &bfs {
            if let Some((u, l)) = parent[b] {
                let line = net.line(l).ok()?;
                let (p, q) = (st.pline[l - 1], st.qline[l - 1]);
                let drop = (line.r * p + line.x * q) / net.v0;
                st.v[b - 1] = if line.from_bus == u {
                    st.v[u - 1] - drop
                } else {
                    st.v[u - 1] + drop
                };
            }
        }
    }
    for x in st
        .pg
        .iter_mut()
        .chain(st.qg.iter_mut())
        .chain(st.qc.iter_mut())
        .chain(st.pline.iter_mut())
        .chain(st.qline.iter_mut())
        .chain(st.shed_p.iter_mut())
        .chain(st.shed_q.iter_mut())
    {
        *x *= base;
    }
    Some(st)
}
