//! Second-stage dispatch under a fixed plan, one interval at a time.

use rayon::prelude::*;

use super::build::{build_second_stage_at, PlanInput};
use super::extract::{extract_dispatch, DispatchSolution, DispatchStep};
use super::model::MilpModel;
use super::problem::{Plan, PlanningProblem};
use super::screen::screen_interval;
use crate::error::{Error, Result};
use crate::scengen::Scenario;
use crate::solver::{self, SolveOptions, SolveStatus};

/// Dispatches every scenario of `scenarios` under `plan`. Intervals are
/// independent once the plan is fixed; each is screened first (when
/// `screen` is set) and the rest are solved as small MILPs in one batch.
/// Results keep input order.
pub fn dispatch_fixed_plan(
    prob: &PlanningProblem,
    plan: &Plan,
    scenarios: &[Scenario],
    opts: &SolveOptions,
    screen: bool,
) -> Vec<Result<DispatchSolution>> {
    if let Err(e) = plan.validate(&prob.net, &prob.params) {
        let msg = e.to_string();
        return scenarios.iter().map(|_| Err(Error::Validation(msg.clone()))).collect();
    }
    let h = prob.profile.horizon();
    let jobs: Vec<(usize, usize)> = (0..scenarios.len()).flat_map(|s| (0..h).map(move |t| (s, t))).collect();
    let screened: Vec<Option<DispatchStep>> = jobs
        .par_iter()
        .map(|&(s, t)| {
            if screen {
                screen_interval(prob, &scenarios[s], plan, t)
            } else {
                None
            }
        })
        .collect();

    // build the remaining interval models
    let mut pending = Vec::new();
    let mut models = Vec::new();
    let mut failures: Vec<Option<Error>> = (0..scenarios.len()).map(|_| None).collect();
    for (j, &(s, t)) in jobs.iter().enumerate() {
        if screened[j].is_some() || failures[s].is_some() {
            continue;
        }
        let sc = &scenarios[s];
        let mut m = MilpModel::new(format!("s{}t{}", sc.id, t));
        match build_second_stage_at(prob, sc, &mut m, PlanInput::Fixed(plan), &[t]) {
            Ok(sv) => {
                pending.push((j, sv));
                models.push(m);
            }
            Err(e) => failures[s] = Some(e.in_scenario(sc.id)),
        }
    }
    log::debug!(
        "fixed-plan dispatch: {} intervals screened, {} solved",
        jobs.len() - models.len(),
        models.len()
    );
    let sols = if models.is_empty() {
        Vec::new()
    } else {
        solver::solve_many(&models, opts)
    };

    let mut steps: Vec<Option<DispatchStep>> = screened;
    for (((j, sv), m), sol) in pending.into_iter().zip(&models).zip(sols) {
        let (s, _) = jobs[j];
        let sc = &scenarios[s];
        let res = sol.and_then(|sol| {
            if sol.status != SolveStatus::Optimal {
                log::warn!("scenario {}: interval solve ended {}", sc.id, sol.status.as_str());
            }
            let vals = sol.require_values()?;
            extract_dispatch(prob, sc, m, vals, &sv)
        });
        match res {
            Ok(mut d) => steps[j] = d.steps.pop(),
            Err(e) => {
                if failures[s].is_none() {
                    failures[s] = Some(e.in_scenario(sc.id));
                }
            }
        }
    }

    let mut out = Vec::with_capacity(scenarios.len());
    let mut it = steps.into_iter();
    for (s, sc) in scenarios.iter().enumerate() {
        let mine: Vec<Option<DispatchStep>> = it.by_ref().take(h).collect();
        if let Some(e) = failures[s].take() {
            out.push(Err(e));
            continue;
        }
        match mine.into_iter().collect::<Option<Vec<_>>>() {
            Some(steps) => out.push(Ok(DispatchSolution { scenario: sc.id, steps })),
            None => out.push(Err(Error::Solver(format!(
                "scenario {}: missing interval result",
                sc.id
            )))),
        }
    }
    out
}
