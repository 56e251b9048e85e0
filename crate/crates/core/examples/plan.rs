//! Solves the two-stage DG planning problem on a handful of fault
//! scenarios, with and without an equity criterion.

use std::collections::BTreeSet;

use dgplan::milp::{solve_planning, uniform_equity, PlanningParams, PlanningProblem};
use dgplan::netmodel::ieee33;
use dgplan::scengen::{Scenario, ScenarioSet};
use dgplan::solver::SolveOptions;

fn main() -> dgplan::Result<()> {
    let (net, profile) = ieee33();
    let profile = profile.window(1)?;
    let faults: [&[usize]; 4] = [&[1, 18], &[18, 19], &[6, 25], &[14, 30]];
    let scenarios = ScenarioSet::from_scenarios(
        faults
            .iter()
            .enumerate()
            .map(|(i, f)| {
                Scenario::nominal(
                    i + 1,
                    f.iter().copied().collect::<BTreeSet<_>>(),
                    0.25,
                    net.n_buses(),
                    1,
                )
            })
            .collect(),
    );
    for e in [f64::INFINITY, 0.05] {
        let prob = PlanningProblem::new(
            net.clone(),
            profile.clone(),
            scenarios.clone(),
            PlanningParams::default(),
        )
        .with_equity(uniform_equity(&net, e));
        let out = solve_planning(&prob, &SolveOptions::default())?;
        println!("E = {e}: {:?}", out.status);
        println!("  units (bus, MW): {:?}", out.plan.units());
        println!(
            "  unserved cost {:.2}, equity penalty {:.2}",
            out.unserved_cost, out.equity_penalty
        );
        let worst = out.elsi.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        println!("  largest training ELSI {:.4} at bus {}", worst.1, worst.0 + 1);
    }
    Ok(())
}
