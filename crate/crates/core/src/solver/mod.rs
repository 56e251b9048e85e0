//! MILP solving: model exchange files, an external-solver bridge, solution
//! validation, and an exact enumerator used as a reference oracle.

mod enumerate;
mod external;
mod lp;
mod mps;
pub mod simplex;
mod solfile;
mod validate;

pub use enumerate::{solve_enumerate, EnumeratorOptions};
pub use external::{solve_external, solve_external_from, solve_external_many, ExternalSolver, ModelFormat};
pub use lp::write_lp;
pub use mps::{escape_name, parse_mps, unescape_name, write_mps};
pub use solfile::{parse_solution, RawSolution, SolutionDialect};
pub use validate::{validate_solution, Violation, ViolationKind};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::MilpModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Timeout,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// One value per model variable, or empty when the solver returned none.
    pub values: Vec<f64>,
    pub log: String,
}

impl Solution {
    pub fn without_values(status: SolveStatus, log: impl Into<String>) -> Self {
        Solution {
            status,
            objective: None,
            values: Vec::new(),
            log: log.into(),
        }
    }

    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, model: &MilpModel, name: &str) -> Option<f64> {
        let id = model.lookup(name)?;
        self.values.get(id.0).copied()
    }

    /// Values of an optimal or feasible solve, or an error naming the status.
    pub fn require_values(&self) -> Result<&[f64]> {
        match self.status {
            SolveStatus::Optimal | SolveStatus::Feasible if self.has_values() => Ok(&self.values),
            SolveStatus::Timeout if self.has_values() => Ok(&self.values),
            s => Err(Error::Solver(format!("no usable solution (status {})", s.as_str()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    External(ExternalSolver),
    Enumerator(EnumeratorOptions),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub time_limit_s: f64,
    pub mip_gap: f64,
    pub threads: usize,
    pub backend: Backend,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_limit_s: 3600.0,
            mip_gap: 1e-4,
            threads: 1,
            backend: Backend::External(ExternalSolver::from_env()),
        }
    }
}

impl SolveOptions {
    pub fn enumerator() -> Self {
        SolveOptions {
            backend: Backend::Enumerator(EnumeratorOptions::default()),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_limit_s > 0.0) {
            return Err(Error::InvalidArgument("time_limit_s must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.mip_gap) {
            return Err(Error::InvalidArgument("mip_gap must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

pub fn solve(model: &MilpModel, opts: &SolveOptions) -> Result<Solution> {
    opts.validate()?;
    match &opts.backend {
        Backend::External(ext) => solve_external(model, opts, ext),
        Backend::Enumerator(e) => solve_enumerate(model, e),
    }
}

/// As [`solve`], seeded with a feasible point given by variable index. The
/// enumerator ignores it.
pub fn solve_from(model: &MilpModel, opts: &SolveOptions, start: Option<&[f64]>) -> Result<Solution> {
    opts.validate()?;
    match &opts.backend {
        Backend::External(ext) => solve_external_from(model, opts, ext, start),
        Backend::Enumerator(e) => solve_enumerate(model, e),
    }
}

/// Solves independent models, batching external solves into few processes.
/// Results keep input order.
pub fn solve_many(models: &[MilpModel], opts: &SolveOptions) -> Vec<Result<Solution>> {
    if let Err(e) = opts.validate() {
        let msg = e.to_string();
        return models
            .iter()
            .map(|_| Err(Error::InvalidArgument(msg.clone())))
            .collect();
    }
    match &opts.backend {
        Backend::External(ext) => solve_external_many(models, opts, ext),
        Backend::Enumerator(e) => models.iter().map(|m| solve_enumerate(m, e)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Mps,
    Lp,
}

pub fn export_model(model: &MilpModel, format: ExportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = match format {
        ExportFormat::Mps => write_mps(model)?,
        ExportFormat::Lp => write_lp(model)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}
