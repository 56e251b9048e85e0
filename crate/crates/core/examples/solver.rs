//! Builds a small MILP, exports it as MPS and LP, and solves it with the
//! exact enumerator and, when available, the external HiGHS driver.

use dgplan::milp::{LinExpr, MilpModel, Sense};
use dgplan::solver::{solve, validate_solution, write_lp, write_mps, ExternalSolver, SolveOptions};

fn main() -> dgplan::Result<()> {
    // knapsack: max 6a + 5b + 4c + x  s.t. 3a + 2b + 2c + x <= 5, x <= 1.5
    let mut m = MilpModel::new("knapsack");
    let items: Vec<_> = ["a", "b", "c"]
        .iter()
        .map(|n| m.binary(format!("pick[{n}]")))
        .collect::<Result<_, _>>()?;
    let x = m.continuous("slack use", 0.0, 1.5)?;
    let mut cap = LinExpr::new();
    for (v, (w, value)) in items.iter().zip([(3.0, 6.0), (2.0, 5.0), (2.0, 4.0)]) {
        cap.add(*v, w);
        m.set_objective(*v, -value);
    }
    cap.add(x, 1.0);
    m.set_objective(x, -1.0);
    m.add_constraint("capacity", cap, Sense::Le, 5.0)?;

    println!("{}", write_mps(&m)?);
    println!("{}", write_lp(&m)?);

    let exact = solve(&m, &SolveOptions::enumerator())?;
    println!("enumerator: {:?}, objective {:?}", exact.status, exact.objective);
    println!("violations: {}", validate_solution(&m, &exact, 1e-9).len());
    if ExternalSolver::highs_available() {
        let ext = solve(&m, &SolveOptions::default())?;
        println!("HiGHS: {:?}, objective {:?}", ext.status, ext.objective);
    }
    Ok(())
}
