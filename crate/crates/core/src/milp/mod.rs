//! The planning MILP: a solver-agnostic model type and the builders of the
//! two-stage deterministic equivalent.

mod build;
mod extract;
mod fixed;
mod model;
mod problem;
mod screen;
mod start;

pub use build::{
    big_m, build_deterministic_equivalent, build_deterministic_equivalent_with, build_first_stage, build_second_stage,
    build_second_stage_at, BigM, DeterministicEquivalent, FirstStageVars, PlanInput, SecondStageVars, StepVars,
};
pub use extract::{
    extract_dispatch, extract_plan, physics_residuals, read_outcome, shed_ratios, solve_planning, solve_planning_from,
    unserved_cost, DispatchSolution, DispatchStep, PhysicsViolation, PlanningOutcome,
};
pub use fixed::dispatch_fixed_plan;
pub use model::*;
pub use problem::{equity_by_class, uniform_equity, Plan, PlanningParams, PlanningProblem};
pub use screen::{forced_shed_mw, screen_interval};
pub use start::planning_start;
