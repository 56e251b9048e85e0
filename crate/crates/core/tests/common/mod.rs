//! Small networks shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use dgplan::netmodel::{Bus, BusKind, IncomeClass, Line, LineKind, LoadProfile, Network, SystemParams};
use dgplan::scengen::{Scenario, ScenarioSet};
use dgplan::solver::{ExternalSolver, SolveOptions};

pub fn bus(id: usize, p_mw: f64, q_mvar: f64, class: IncomeClass) -> Bus {
    Bus {
        id,
        kind: if id == 1 { BusKind::Substation } else { BusKind::Load },
        income_class: class,
        peak_p: p_mw / 10.0,
        peak_q: q_mvar / 10.0,
        svc: None,
        dg_candidate: id != 1,
    }
}

pub fn line(id: usize, from: usize, to: usize, tie: bool) -> Line {
    Line {
        id,
        from_bus: from,
        to_bus: to,
        r: 0.01,
        x: 0.01,
        s_max: 1.0,
        kind: if tie { LineKind::Tie } else { LineKind::Sectionalizing },
        fault_weight: if tie { 0.0 } else { 1.0 },
    }
}

/// Substation and one load over a single line.
pub fn two_bus() -> Network {
    Network::new(
        vec![
            bus(1, 0.0, 0.0, IncomeClass::Medium),
            bus(2, 0.5, 0.2, IncomeClass::Medium),
        ],
        vec![line(1, 1, 2, false)],
        SystemParams::default(),
    )
    .unwrap()
}

/// 1 ─ 2 ─ 3 ─ 4 and 2 ─ 5 ─ 6, tie 4 ┄ 6. Buses 4 and 6 are low income.
pub fn six_bus() -> Network {
    use IncomeClass::*;
    Network::new(
        vec![
            bus(1, 0.0, 0.0, Medium),
            bus(2, 0.3, 0.1, Medium),
            bus(3, 0.2, 0.08, High),
            bus(4, 0.4, 0.2, Low),
            bus(5, 0.25, 0.1, Medium),
            bus(6, 0.35, 0.15, Low),
        ],
        vec![
            line(1, 1, 2, false),
            line(2, 2, 3, false),
            line(3, 3, 4, false),
            line(4, 2, 5, false),
            line(5, 5, 6, false),
            line(6, 4, 6, true),
        ],
        SystemParams::default(),
    )
    .unwrap()
}

pub fn scenarios(n_buses: usize, horizon: usize, fault_sets: &[(&[usize], f64)]) -> ScenarioSet {
    let v = fault_sets
        .iter()
        .enumerate()
        .map(|(i, (f, p))| Scenario::nominal(i + 1, f.iter().copied().collect::<BTreeSet<_>>(), *p, n_buses, horizon))
        .collect();
    ScenarioSet::from_scenarios(v)
}

pub fn flat(horizon: usize) -> LoadProfile {
    LoadProfile::flat(horizon, 1.0)
}

/// The bundled HiGHS driver at zero gap.
pub fn highs() -> SolveOptions {
    assert!(
        ExternalSolver::highs_available(),
        "the HiGHS driver needs python3 with highspy (or set DGPLAN_PYTHON)"
    );
    SolveOptions {
        time_limit_s: 600.0,
        mip_gap: 0.0,
        ..SolveOptions::default()
    }
}
