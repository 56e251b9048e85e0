//! Exhaustive integer enumeration with an LP per leaf: a reference oracle
//! for tiny models.

use num_rational::BigRational;

use super::simplex::{solve_lp, LpOutcome, LpProblem};
use super::{Solution, SolveStatus};
use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense};

#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratorOptions {
    /// Refuse models with more integer-valued variables than this.
    pub max_integer: usize,
    /// Solve leaf LPs in exact rational arithmetic.
    pub exact: bool,
}

impl Default for EnumeratorOptions {
    fn default() -> Self {
        EnumeratorOptions {
            max_integer: 24,
            exact: false,
        }
    }
}

const FEAS_TOL: f64 = 1e-7;

struct Search<'a> {
    model: &'a MilpModel,
    opts: &'a EnumeratorOptions,
    order: Vec<usize>,
    best: Option<(f64, Vec<f64>)>,
    leaves: u64,
    nodes: u64,
}

pub fn solve_enumerate(model: &MilpModel, opts: &EnumeratorOptions) -> Result<Solution> {
    let order: Vec<usize> = (0..model.n_vars())
        .filter(|&j| model.vars()[j].kind.is_integral())
        .collect();
    if order.len() > opts.max_integer {
        return Err(Error::Solver(format!(
            "enumerator limit exceeded: {} integer variables > {}",
            order.len(),
            opts.max_integer
        )));
    }
    let mut lo: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let mut hi: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    for &j in &order {
        lo[j] = lo[j].ceil();
        hi[j] = hi[j].floor();
    }
    let mut s = Search {
        model,
        opts,
        order,
        best: None,
        leaves: 0,
        nodes: 0,
    };
    if propagate(model, &mut lo, &mut hi) {
        s.dfs(lo, hi)?;
    }
    let log = format!("enumerator: {} nodes, {} leaf LPs", s.nodes, s.leaves);
    Ok(match s.best {
        Some((obj, x)) => Solution {
            status: SolveStatus::Optimal,
            objective: Some(obj),
            values: x,
            log,
        },
        None => Solution::without_values(SolveStatus::Infeasible, log),
    })
}

impl Search<'_> {
    fn dfs(&mut self, lo: Vec<f64>, hi: Vec<f64>) -> Result<()> {
        self.nodes += 1;
        let Some(&j) = self.order.iter().find(|&&j| lo[j] < hi[j]) else {
            return self.leaf(&lo, &hi);
        };
        let (a, b) = (lo[j] as i64, hi[j] as i64);
        for v in a..=b {
            let (mut l, mut h) = (lo.clone(), hi.clone());
            l[j] = v as f64;
            h[j] = v as f64;
            if propagate(self.model, &mut l, &mut h) {
                self.dfs(l, h)?;
            }
        }
        Ok(())
    }

    fn leaf(&mut self, lo: &[f64], hi: &[f64]) -> Result<()> {
        self.leaves += 1;
        let vars = self.model.vars();
        // integers fixed at the enumerated values, continuous at original bounds
        let (lower, upper) = (0..vars.len())
            .map(|j| {
                if vars[j].kind.is_integral() {
                    (lo[j], hi[j])
                } else {
                    (vars[j].lower, vars[j].upper)
                }
            })
            .unzip();
        let lp = LpProblem {
            cost: self.model.objective().to_vec(),
            lower,
            upper,
            rows: self
                .model
                .constraints()
                .iter()
                .map(|c| (c.terms.iter().map(|&(v, a)| (v.0, a)).collect(), c.sense, c.rhs))
                .collect(),
        };
        let out = if self.opts.exact {
            solve_lp::<BigRational>(&lp)
        } else {
            solve_lp::<f64>(&lp)
        };
        match out {
            LpOutcome::Infeasible => Ok(()),
            LpOutcome::Unbounded => Err(Error::Solver("enumerator: continuous subproblem is unbounded".into())),
            LpOutcome::Optimal { x, objective } => {
                let obj = objective + self.model.obj_constant;
                let better = match &self.best {
                    None => true,
                    // strict improvement keeps the lexicographically first argmin
                    Some((b, _)) => obj < b - 1e-9 * b.abs().max(1.0),
                };
                if better {
                    self.best = Some((obj, x));
                }
                Ok(())
            }
        }
    }
}

/// Activity-based bound tightening to a fixpoint. Returns false when some row
/// cannot be satisfied within the current bounds.
fn propagate(model: &MilpModel, lo: &mut [f64], hi: &mut [f64]) -> bool {
    let vars = model.vars();
    for _pass in 0..50 {
        let mut changed = false;
        for c in model.constraints() {
            let dirs: &[f64] = match c.sense {
                Sense::Le => &[1.0],
                Sense::Ge => &[-1.0],
                Sense::Eq => &[1.0, -1.0],
            };
            for &sg in dirs {
                // row: Σ sg·a·x ≤ sg·rhs
                let rhs = sg * c.rhs;
                let mut fin = 0.0;
                let mut n_inf = 0;
                let mut inf_at = 0;
                for &(v, a) in &c.terms {
                    let a = sg * a;
                    let b = if a > 0.0 { lo[v.0] } else { hi[v.0] };
                    if b.is_finite() {
                        fin += a * b;
                    } else {
                        n_inf += 1;
                        inf_at = v.0;
                    }
                }
                let tol = FEAS_TOL * (1.0 + rhs.abs().max(fin.abs()));
                if n_inf == 0 && fin > rhs + tol {
                    return false;
                }
                if n_inf > 1 {
                    continue;
                }
                for &(v, a) in &c.terms {
                    let j = v.0;
                    let a = sg * a;
                    let resid = if n_inf == 0 {
                        fin - a * if a > 0.0 { lo[j] } else { hi[j] }
                    } else if inf_at == j {
                        fin
                    } else {
                        continue;
                    };
                    let bound = (rhs - resid) / a;
                    let integral = vars[j].kind.is_integral();
                    if a > 0.0 {
                        let nb = if integral { (bound + tol).floor() } else { bound + tol };
                        if nb < hi[j] - 1e-9 * (1.0 + nb.abs()) && (integral || nb < hi[j] - 1e-6) {
                            hi[j] = nb;
                            changed = true;
                        }
                    } else {
                        let nb = if integral { (bound - tol).ceil() } else { bound - tol };
                        if nb > lo[j] + 1e-9 * (1.0 + nb.abs()) && (integral || nb > lo[j] + 1e-6) {
                            lo[j] = nb;
                            changed = true;
                        }
                    }
                    if lo[j] > hi[j] + tol {
                        return false;
                    }
                    if lo[j] > hi[j] {
                        // within tolerance: collapse
                        let m = 0.5 * (lo[j] + hi[j]);
                        lo[j] = m;
                        hi[j] = m;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, VarKind};

    #[test]
    fn pure_lp() {
        let mut m = MilpModel::new("lp");
        let x = m.continuous("x", 1.0, f64::INFINITY).unwrap();
        m.set_objective(x, 1.0);
        let s = solve_enumerate(&m, &EnumeratorOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, Some(1.0));
        assert_eq!(s.values, vec![1.0]);
    }

    #[test]
    fn two_binary_toy() {
        // min -3a - 2b + 4ab-ish via y ≥ a + b - 1 with cost 6 → optimum (1,0)
        let mut m = MilpModel::new("toy");
        let a = m.binary("a").unwrap();
        let b = m.binary("b").unwrap();
        let y = m.continuous("y", 0.0, 1.0).unwrap();
        m.set_objective(a, -3.0);
        m.set_objective(b, -2.0);
        m.set_objective(y, 6.0);
        m.add_constraint("link", LinExpr::term(a, 1.0).with(b, 1.0).with(y, -1.0), Sense::Le, 1.0)
            .unwrap();
        for exact in [false, true] {
            let s = solve_enumerate(
                &m,
                &EnumeratorOptions {
                    exact,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(s.values[..2], [1.0, 0.0]);
            assert!((s.objective.unwrap() + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let mut m = MilpModel::new("tie");
        let a = m.binary("a").unwrap();
        let b = m.binary("b").unwrap();
        m.add_constraint("one", LinExpr::term(a, 1.0).with(b, 1.0), Sense::Eq, 1.0)
            .unwrap();
        let s = solve_enumerate(&m, &EnumeratorOptions::default()).unwrap();
        assert_eq!(s.values, vec![0.0, 1.0]);
    }

    #[test]
    fn integer_ranges_and_propagation() {
        // max 5x + 4y s.t. 6x + 4y <= 24, x + 2y <= 6, x,y ∈ {0..10} → (4,0) = 20
        let mut m = MilpModel::new("int");
        let x = m.add_var("x", VarKind::Integer, 0.0, 10.0).unwrap();
        let y = m.add_var("y", VarKind::Integer, 0.0, 10.0).unwrap();
        m.set_objective(x, -5.0);
        m.set_objective(y, -4.0);
        m.add_constraint("c1", LinExpr::term(x, 6.0).with(y, 4.0), Sense::Le, 24.0)
            .unwrap();
        m.add_constraint("c2", LinExpr::term(x, 1.0).with(y, 2.0), Sense::Le, 6.0)
            .unwrap();
        let s = solve_enumerate(&m, &EnumeratorOptions::default()).unwrap();
        assert_eq!(s.objective, Some(-20.0));
    }

    #[test]
    fn infeasible_limit_and_unbounded() {
        let mut m = MilpModel::new("inf");
        let x = m.binary("x").unwrap();
        m.add_constraint("lo", LinExpr::term(x, 2.0), Sense::Eq, 1.0).unwrap();
        let s = solve_enumerate(&m, &EnumeratorOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);

        let mut big = MilpModel::new("big");
        for i in 0..3 {
            big.binary(format!("b{i}")).unwrap();
        }
        let e = solve_enumerate(
            &big,
            &EnumeratorOptions {
                max_integer: 2,
                exact: false,
            },
        );
        assert!(e.is_err());

        let mut u = MilpModel::new("unb");
        let y = u.continuous("y", f64::NEG_INFINITY, 0.0).unwrap();
        u.binary("b").unwrap();
        u.set_objective(y, 1.0);
        assert!(solve_enumerate(&u, &EnumeratorOptions::default()).is_err());
    }
}
