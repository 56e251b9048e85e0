//! Scores a fixed DG plan against the no-DG baseline on sampled test
//! scenarios: ELSI, expected unserved cost and per-bus shed reduction.

use dgplan::evaluate::{describe, evaluate_plan, reduction_report, EvalOptions};
use dgplan::milp::{Plan, PlanningParams};
use dgplan::netmodel::ieee33;
use dgplan::scengen::{build_scenarios, sample_test_scenarios, ScenarioOptions};

fn main() -> dgplan::Result<()> {
    let (net, profile) = ieee33();
    let profile = profile.window(2)?;
    let set = build_scenarios(&net, &profile, &ScenarioOptions::default())?;
    let test = sample_test_scenarios(&set, 60, 11, net.n_buses())?;
    let params = PlanningParams::default();
    let opts = EvalOptions::default();

    let plan = Plan::empty(33).with_unit(16, 0.8).with_unit(27, 2.5).with_unit(33, 1.0);
    let base = evaluate_plan(&Plan::empty(33), &test, &net, &profile, &params, &opts)?;
    let with = evaluate_plan(&plan, &test, &net, &profile, &params, &opts)?;
    print!("{}", describe(&net, &with));
    let red = reduction_report(&with, &base)?;
    println!(
        "expected cost {:.2} -> {:.2}, system shed reduction {:.1}%",
        base.expected_unserved_cost, with.expected_unserved_cost, red.system_shed_reduction_pct
    );
    Ok(())
}
