//! External-solver bridge against the bundled HiGHS driver. Skipped (with a
//! note) when `highspy` is not importable.

use dgplan::milp::{LinExpr, MilpModel, Sense, VarKind};
use dgplan::solver::{
    self, solve_enumerate, validate_solution, Backend, EnumeratorOptions, ExternalSolver, ModelFormat, SolutionDialect,
    SolveOptions, SolveStatus,
};

fn highs() -> Option<SolveOptions> {
    if !ExternalSolver::highs_available() {
        eprintln!("highspy not available; skipping");
        return None;
    }
    Some(SolveOptions {
        mip_gap: 0.0,
        backend: Backend::External(ExternalSolver::highs()),
        ..Default::default()
    })
}

fn knapsack() -> MilpModel {
    // values 6, 10, 12; weights 1, 2, 3; capacity 5 → best {2,3} = 22
    let mut m = MilpModel::new("knap");
    let mut cap = LinExpr::new();
    for (i, (v, w)) in [(6.0, 1.0), (10.0, 2.0), (12.0, 3.0)].into_iter().enumerate() {
        let x = m.binary(format!("x[{}]", i + 1)).unwrap();
        m.set_objective(x, -v);
        cap.add(x, w);
    }
    m.add_constraint("cap", cap, Sense::Le, 5.0).unwrap();
    m
}

#[test]
fn infeasible_toy() {
    let Some(opts) = highs() else { return };
    let mut m = MilpModel::new("inf");
    let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
    m.add_constraint("le", LinExpr::term(x, 1.0), Sense::Le, 0.0).unwrap();
    m.add_constraint("ge", LinExpr::term(x, 1.0), Sense::Ge, 1.0).unwrap();
    let s = solver::solve(&m, &opts).unwrap();
    assert_eq!(s.status, SolveStatus::Infeasible);
}

#[test]
fn knapsack_matches_hand_enumeration() {
    let Some(mut opts) = highs() else { return };
    let m = knapsack();
    for (format, dialect) in [
        (ModelFormat::Mps, SolutionDialect::Line),
        (ModelFormat::Lp, SolutionDialect::Xml),
    ] {
        let mut ext = ExternalSolver::highs();
        ext.format = format;
        ext.dialect = dialect;
        ext.command = format!(
            "{} --dialect {}",
            ext.command,
            if dialect == SolutionDialect::Xml { "xml" } else { "line" }
        );
        opts.backend = Backend::External(ext);
        let s = solver::solve(&m, &opts).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective.unwrap() + 22.0).abs() < 1e-9);
        assert_eq!(s.value(&m, "x[1]"), Some(0.0));
        assert!(validate_solution(&m, &s, 1e-6).is_empty());
    }
    let e = solve_enumerate(&m, &EnumeratorOptions::default()).unwrap();
    assert_eq!(e.objective, Some(-22.0));
}

#[test]
fn two_binary_toy_agrees_with_enumerator() {
    let Some(opts) = highs() else { return };
    let mut m = MilpModel::new("toy");
    let a = m.binary("a").unwrap();
    let b = m.binary("b").unwrap();
    let y = m.continuous("y", 0.0, 1.0).unwrap();
    m.set_objective(a, -3.0);
    m.set_objective(b, -2.0);
    m.set_objective(y, 6.0);
    m.add_constraint("link", LinExpr::term(a, 1.0).with(b, 1.0).with(y, -1.0), Sense::Le, 1.0)
        .unwrap();
    let x = solver::solve(&m, &opts).unwrap();
    let e = solve_enumerate(&m, &EnumeratorOptions::default()).unwrap();
    assert_eq!(x.values[..2], [1.0, 0.0]);
    assert!((x.objective.unwrap() - e.objective.unwrap()).abs() < 1e-6);
}

#[test]
fn batch_solves_keep_order() {
    let Some(opts) = highs() else { return };
    let mut models = Vec::new();
    for cap in 0..5 {
        let mut m = knapsack();
        m.name = format!("knap{cap}");
        let mut r = MilpModel::new(m.name.clone());
        // rebuild with a different capacity
        let mut e = LinExpr::new();
        for (i, w) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            let x = r.binary(format!("x[{}]", i + 1)).unwrap();
            r.set_objective(x, m.objective()[i]);
            e.add(x, w);
        }
        r.add_constraint("cap", e, Sense::Le, cap as f64).unwrap();
        models.push(r);
    }
    let out = solver::solve_many(&models, &opts);
    let expect = [0.0, -6.0, -10.0, -16.0, -18.0];
    for (s, want) in out.iter().zip(expect) {
        let s = s.as_ref().unwrap();
        assert!((s.objective.unwrap() - want).abs() < 1e-9, "{s:?}");
    }
}

#[test]
fn tiny_time_limit_reports_timeout() {
    let Some(mut opts) = highs() else { return };
    // a multi-dimensional knapsack large enough not to finish in a millisecond
    let mut m = MilpModel::new("big");
    let n = 400;
    let xs: Vec<_> = (0..n)
        .map(|i| m.add_var(format!("x[{i}]"), VarKind::Integer, 0.0, 3.0).unwrap())
        .collect();
    for (i, &x) in xs.iter().enumerate() {
        m.set_objective(x, -(((i * 7919) % 97) as f64 + 1.0));
    }
    for r in 0..40 {
        let mut e = LinExpr::new();
        for (i, &x) in xs.iter().enumerate() {
            e.add(x, (((i + 1) * (r + 3) * 104_729) % 89) as f64 + 1.0);
        }
        m.add_constraint(format!("r{r}"), e, Sense::Le, 5000.0).unwrap();
    }
    opts.time_limit_s = 0.001;
    let s = solver::solve(&m, &opts).unwrap();
    assert!(
        matches!(s.status, SolveStatus::Timeout | SolveStatus::Feasible),
        "{:?}",
        s.status
    );
    if s.has_values() {
        assert!(validate_solution(&m, &s, 1e-4).is_empty());
    }
}

#[test]
fn failing_command_is_an_error() {
    let mut opts = SolveOptions::enumerator();
    opts.backend = Backend::External(ExternalSolver::with_command(
        "false {model} {solution}",
        SolutionDialect::Line,
    ));
    assert!(solver::solve(&knapsack(), &opts).is_err());
}
