//! Independent feasibility check of a solution against its model.

use super::Solution;
use crate::milp::MilpModel;

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    Row,
    Bound,
    Integrality,
    Objective,
    MissingValues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Row or variable name; empty for objective and missing-value reports.
    pub name: String,
    pub amount: f64,
}

/// Every row residual, bound, integrality gap and the reported objective are
/// compared against `tol`.
pub fn validate_solution(model: &MilpModel, sol: &Solution, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    if sol.values.len() != model.n_vars() {
        out.push(Violation {
            kind: ViolationKind::MissingValues,
            name: String::new(),
            amount: (model.n_vars() as f64 - sol.values.len() as f64).abs(),
        });
        return out;
    }
    let x = &sol.values;
    for c in model.constraints() {
        let v = c.violation(x);
        if v > tol || v.is_nan() {
            out.push(Violation {
                kind: ViolationKind::Row,
                name: c.name.clone(),
                amount: v,
            });
        }
    }
    for (var, &v) in model.vars().iter().zip(x) {
        let b = (var.lower - v).max(v - var.upper).max(0.0);
        if b > tol || v.is_nan() {
            out.push(Violation {
                kind: ViolationKind::Bound,
                name: var.name.clone(),
                amount: b,
            });
        }
        if var.kind.is_integral() {
            let r = (v - v.round()).abs();
            if r > tol {
                out.push(Violation {
                    kind: ViolationKind::Integrality,
                    name: var.name.clone(),
                    amount: r,
                });
            }
        }
    }
    if let Some(obj) = sol.objective {
        let d = (model.objective_value(x) - obj).abs();
        if d > tol * obj.abs().max(1.0) {
            out.push(Violation {
                kind: ViolationKind::Objective,
                name: String::new(),
                amount: d,
            });
        }
    }
    out
}
