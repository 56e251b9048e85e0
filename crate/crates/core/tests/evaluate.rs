mod common;

use common::*;
use dgplan::evaluate::*;
use dgplan::milp::{Plan, PlanningParams};
use dgplan::Error;

fn opts() -> EvalOptions {
    EvalOptions {
        solve: highs(),
        ..EvalOptions::default()
    }
}

fn params() -> PlanningParams {
    PlanningParams {
        n_dg_max: 2,
        p_max: 0.5,
        ..PlanningParams::default()
    }
}

#[test]
fn reconnectable_faults_give_zero_elsi() {
    // line 3 or 5 alone: the tie back-feeds the far end
    let net = six_bus();
    let test = scenarios(6, 2, &[(&[3], 0.5), (&[5], 0.5)]);
    let r = evaluate_plan(&Plan::empty(6), &test, &net, &flat(2), &params(), &opts()).unwrap();
    assert!(r.elsi.iter().all(|&e| e.abs() < 1e-9), "{:?}", r.elsi);
    assert_eq!(r.expected_unserved_cost, 0.0);
}

#[test]
fn unit_arithmetic_one_mwh_is_fifty_thousand() {
    // 0.5 MW lost for two hours
    let net = two_bus();
    let test = scenarios(2, 2, &[(&[1], 1.0)]);
    let r = evaluate_plan(
        &Plan::empty(2),
        &test,
        &net,
        &flat(2),
        &PlanningParams::default(),
        &opts(),
    )
    .unwrap();
    assert!((r.total_shed_mwh - 1.0).abs() < 1e-9);
    assert!((r.expected_unserved_cost - 50_000.0).abs() < 1e-6);
    assert!((r.elsi[1] - 2.0).abs() < 1e-9);
}

#[test]
fn dg_on_stranded_bus_lowers_its_elsi() {
    let net = six_bus();
    let test = scenarios(6, 2, &[(&[2, 3], 0.7), (&[1, 4], 0.3)]);
    let base = evaluate_plan(&Plan::empty(6), &test, &net, &flat(2), &params(), &opts()).unwrap();
    let plan = Plan::empty(6).with_unit(3, 0.5);
    let with = evaluate_plan(&plan, &test, &net, &flat(2), &params(), &opts()).unwrap();
    assert!(with.elsi[2] < base.elsi[2]);
    for r in [&base, &with] {
        for &e in &r.elsi {
            assert!((0.0..=2.0 + 1e-9).contains(&e));
        }
        let shed: f64 = r.per_scenario.iter().map(|s| s.prob * s.shed_mwh).sum();
        assert!((r.expected_unserved_cost - 50.0 * 1000.0 * shed).abs() < 1e-6);
    }
    let red = reduction_report(&with, &base).unwrap();
    assert!(red.buses[2].reduction_pct > 0.0);
    assert!(red.system_shed_reduction_pct > 0.0);
    assert!(red.buses[0].no_outage && red.buses[0].reduction_pct == 0.0);

    let c = equity_cost(&base, &with).unwrap();
    assert!(c.cost > 0.0 && c.ratio > 0.0 && c.ratio < 1.0);
}

#[test]
fn self_comparisons_are_zero() {
    let net = six_bus();
    let test = scenarios(6, 1, &[(&[2, 3], 0.5), (&[1, 4], 0.5)]);
    let plan = Plan::empty(6).with_unit(6, 0.3);
    let a = evaluate_plan(&plan, &test, &net, &flat(1), &params(), &opts()).unwrap();
    let b = evaluate_plan(&plan.clone(), &test, &net, &flat(1), &params(), &opts()).unwrap();
    assert_eq!(equity_cost(&a, &a).unwrap().cost, 0.0);
    assert_eq!(equity_cost(&a, &b).unwrap().cost, 0.0);
    let red = reduction_report(&a, &a).unwrap();
    assert!(red.buses.iter().all(|b| b.reduction_pct == 0.0));
}

#[test]
fn fingerprint_mismatch_is_rejected() {
    let net = six_bus();
    let a = evaluate_plan(
        &Plan::empty(6),
        &scenarios(6, 1, &[(&[2, 3], 1.0)]),
        &net,
        &flat(1),
        &params(),
        &opts(),
    )
    .unwrap();
    let b = evaluate_plan(
        &Plan::empty(6),
        &scenarios(6, 1, &[(&[1, 4], 1.0)]),
        &net,
        &flat(1),
        &params(),
        &opts(),
    )
    .unwrap();
    assert!(matches!(equity_cost(&a, &b), Err(Error::FingerprintMismatch(..))));
    assert!(matches!(reduction_report(&a, &b), Err(Error::FingerprintMismatch(..))));
}

#[test]
fn beta_is_linear() {
    let net = six_bus();
    let test = scenarios(6, 2, &[(&[2, 3], 0.5), (&[1, 4], 0.5)]);
    let p1 = params();
    let p2 = PlanningParams {
        beta: 2.0 * p1.beta,
        ..p1.clone()
    };
    let a = evaluate_plan(&Plan::empty(6), &test, &net, &flat(2), &p1, &opts()).unwrap();
    let b = evaluate_plan(&Plan::empty(6), &test, &net, &flat(2), &p2, &opts()).unwrap();
    assert!((b.expected_unserved_cost - 2.0 * a.expected_unserved_cost).abs() < 1e-6);
    assert_eq!(a.elsi, b.elsi);
}

#[test]
fn csv_tables() {
    let net = six_bus();
    let test = scenarios(6, 1, &[(&[2, 3], 1.0)]);
    let r = evaluate_plan(&Plan::empty(6), &test, &net, &flat(1), &params(), &opts()).unwrap();
    let red = reduction_report(&r, &r).unwrap();
    let csv = elsi_csv(&net, &r, Some(&red));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "bus,income_class,elsi,reduction_pct,avg_load_mw");
    assert_eq!(lines.len(), 7);
    assert!(lines[3].starts_with("3,high,1,0,"));
    let rows = vec![
        SummaryRow {
            plan: "eec_0.02".into(),
            e: Some(0.02),
            expected_cost: 10.0,
            equity_cost: 2.0,
            equity_cost_ratio: 0.2,
        },
        SummaryRow {
            plan: "ref. case".into(),
            e: Some(f64::INFINITY),
            expected_cost: 8.0,
            equity_cost: 0.0,
            equity_cost_ratio: 0.0,
        },
    ];
    assert_eq!(
        summary_csv(&rows),
        "plan,E,expected_cost,equity_cost,equity_cost_ratio\neec_0.02,0.02,10,2,0.2\nref. case,inf,8,0,0\n"
    );
}

#[test]
fn skipped_failures_are_recorded() {
    // an invalid solver command fails every MILP interval; screening is off
    let net = six_bus();
    let test = scenarios(6, 1, &[(&[2, 3], 1.0)]);
    let mut o = opts();
    o.screen = false;
    o.solve.backend = dgplan::solver::Backend::External(dgplan::solver::ExternalSolver::with_command(
        "false {model} {solution}",
        dgplan::solver::SolutionDialect::Line,
    ));
    assert!(evaluate_plan(&Plan::empty(6), &test, &net, &flat(1), &params(), &o).is_err());
    o.skip_failures = true;
    let r = evaluate_plan(&Plan::empty(6), &test, &net, &flat(1), &params(), &o).unwrap();
    assert_eq!(r.failed.len(), 1);
    assert_eq!(r.failed[0].0, 1);
}
