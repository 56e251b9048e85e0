//! Study configuration (TOML). Every section and field is optional; missing
//! values take the defaults below. `inf` is a plain TOML float.
//!
//! ```toml
//! case = "ieee33"          # bundled case, or a path to a case file
//! horizon = 4              # first T intervals of the case profile
//! output = "study-out"
//!
//! [scenarios]
//! sizes = [2, 3]
//! seed = 7
//! low_income_weight_ratio = 2.0
//! cap_3line = 400
//! tau = { std = 0.04, lo = 0.8, hi = 1.2 }
//!
//! [reduction]
//! kmax = 40
//! restarts = 8
//! seed = 3
//! k = 20                   # omit to take the elbow
//!
//! [problem]
//! n_dg_max = 5
//! budget = 2e6
//!
//! [equity]
//! default = inf
//! sweep = [0.02, 0.05, 0.08, 0.12, inf]
//! class = { low = 0.02 }
//! bus = { "18" = 0.05 }
//!
//! [solver]
//! backend = "highs"        # highs | command | enumerator
//! time_limit_s = 600
//!
//! [test]
//! n_test = 320
//! seed = 11
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::EvalOptions;
use crate::milp::{equity_by_class, PlanningParams};
use crate::netmodel::{IncomeClass, Network};
use crate::reduce::ReduceOptions;
use crate::scengen::ScenarioOptions;
use crate::solver::{Backend, EnumeratorOptions, ExternalSolver, ModelFormat, SolutionDialect, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub case: String,
    /// Leading intervals of the case profile; the whole profile when absent.
    pub horizon: Option<usize>,
    pub output: PathBuf,
    pub scenarios: ScenarioOptions,
    pub reduction: ReductionConfig,
    pub problem: PlanningParams,
    pub equity: EquityConfig,
    pub solver: SolverConfig,
    pub test: TestConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            case: "ieee33".into(),
            horizon: None,
            output: PathBuf::from("dgplan-out"),
            scenarios: ScenarioOptions::default(),
            reduction: ReductionConfig::default(),
            problem: PlanningParams::default(),
            equity: EquityConfig::default(),
            solver: SolverConfig::default(),
            test: TestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub kmax: usize,
    pub restarts: usize,
    pub seed: u64,
    pub k: Option<usize>,
    /// Settle evident intervals without the solver when building features.
    pub screen: bool,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        let r = ReduceOptions::default();
        ReductionConfig {
            kmax: r.kmax,
            restarts: r.restarts,
            seed: r.seed,
            k: r.k,
            screen: true,
        }
    }
}

impl ReductionConfig {
    pub fn options(&self) -> ReduceOptions {
        ReduceOptions {
            kmax: self.kmax,
            restarts: self.restarts,
            seed: self.seed,
            k: self.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquityConfig {
    /// e* for every bus without a more specific entry.
    pub default: f64,
    /// Uniform criteria planned and evaluated by `report`.
    pub sweep: Vec<f64>,
    /// Per income class (`low`, `medium`, `high`).
    pub class: BTreeMap<String, f64>,
    /// Per bus id.
    pub bus: BTreeMap<String, f64>,
}

impl Default for EquityConfig {
    fn default() -> Self {
        EquityConfig {
            default: f64::INFINITY,
            sweep: vec![0.02, 0.05, 0.08, 0.12, f64::INFINITY],
            class: BTreeMap::new(),
            bus: BTreeMap::new(),
        }
    }
}

impl EquityConfig {
    /// e* by bus − 1; the most specific entry wins.
    pub fn resolve(&self, net: &Network) -> Result<Vec<f64>> {
        let mut by_class = Vec::new();
        for (name, &e) in &self.class {
            let c: IncomeClass = name.parse().map_err(Error::Config)?;
            by_class.push((c, e));
        }
        let mut by_bus = Vec::new();
        for (name, &e) in &self.bus {
            let b: usize = name
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("equity.bus: `{name}` is not a bus id")))?;
            by_bus.push((b, e));
        }
        equity_by_class(net, self.default, &by_class, &by_bus).map_err(|e| Error::Config(e.to_string()))
    }

    /// Sweep values, ascending, with `inf` present exactly once.
    pub fn sweep_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.sweep.iter().copied().filter(|e| e.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.push(f64::INFINITY);
        v
    }

    fn validate(&self) -> Result<()> {
        let all = std::iter::once(&self.default)
            .chain(&self.sweep)
            .chain(self.class.values())
            .chain(self.bus.values());
        for &e in all {
            if e.is_nan() || e < 0.0 {
                return Err(Error::Config(format!("equity criteria must be >= 0 (got {e})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Bundled HiGHS driver; `DGPLAN_SOLVER_CMD` overrides the command.
    #[default]
    Highs,
    /// Any solver behind `command` (and optionally `batch_command`).
    Command,
    /// Exhaustive enumeration; tiny models only.
    Enumerator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub backend: BackendKind,
    /// `<exe> {model} {solution} [flags]`.
    pub command: Option<String>,
    pub batch_command: Option<String>,
    pub dialect: SolutionDialect,
    pub format: ModelFormat,
    pub keep_dir: Option<PathBuf>,
    pub time_limit_s: f64,
    pub mip_gap: f64,
    pub threads: usize,
    pub max_integer: usize,
    pub exact: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolveOptions::default();
        let e = EnumeratorOptions::default();
        SolverConfig {
            backend: BackendKind::Highs,
            command: None,
            batch_command: None,
            dialect: SolutionDialect::Line,
            format: ModelFormat::Mps,
            keep_dir: None,
            time_limit_s: s.time_limit_s,
            mip_gap: s.mip_gap,
            threads: s.threads,
            max_integer: e.max_integer,
            exact: e.exact,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> Result<SolveOptions> {
        let backend = match self.backend {
            BackendKind::Highs => {
                let mut ext = ExternalSolver::from_env();
                ext.keep_dir = self.keep_dir.clone();
                Backend::External(ext)
            }
            BackendKind::Command => {
                let cmd = self
                    .command
                    .clone()
                    .ok_or_else(|| Error::Config("solver.backend = \"command\" needs solver.command".into()))?;
                let mut ext = ExternalSolver::with_command(cmd, self.dialect);
                ext.batch_command = self.batch_command.clone();
                ext.format = self.format;
                ext.keep_dir = self.keep_dir.clone();
                Backend::External(ext)
            }
            BackendKind::Enumerator => Backend::Enumerator(EnumeratorOptions {
                max_integer: self.max_integer,
                exact: self.exact,
            }),
        };
        let opts = SolveOptions {
            time_limit_s: self.time_limit_s,
            mip_gap: self.mip_gap,
            threads: self.threads.max(1),
            backend,
        };
        opts.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub n_test: usize,
    pub seed: u64,
    pub screen: bool,
    pub skip_failures: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            n_test: 320,
            seed: 1,
            screen: true,
            skip_failures: false,
        }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        if self.horizon == Some(0) {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        self.problem.validate().map_err(cfg)?;
        self.equity.validate()?;
        self.solver.options()?;
        if self.reduction.restarts == 0 {
            return Err(Error::Config("reduction.restarts must be >= 1".into()));
        }
        if self.reduction.k == Some(0) {
            return Err(Error::Config("reduction.k must be >= 1".into()));
        }
        if self.reduction.k.is_none() && self.reduction.kmax < 3 {
            return Err(Error::Config("elbow selection needs reduction.kmax >= 3".into()));
        }
        if self.scenarios.sizes.is_empty() {
            return Err(Error::Config("scenarios.sizes must not be empty".into()));
        }
        Ok(())
    }

    pub fn eval_options(&self) -> Result<EvalOptions> {
        Ok(EvalOptions {
            solve: self.solver.options()?,
            screen: self.test.screen,
            skip_failures: self.test.skip_failures,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::ieee33;

    #[test]
    fn empty_config_is_default_and_inf_parses() {
        assert_eq!(StudyConfig::from_toml("").unwrap(), StudyConfig::default());
        let c = StudyConfig::from_toml("[equity]\ndefault = inf\nsweep = [inf, 0.05, 0.02, inf]\n").unwrap();
        assert!(c.equity.default.is_infinite());
        let s = c.equity.sweep_values();
        assert_eq!(&s[..2], &[0.02, 0.05]);
        assert!(s[2].is_infinite() && s.len() == 3);
    }

    #[test]
    fn roundtrip_and_unknown_fields() {
        let c = StudyConfig::default();
        assert_eq!(StudyConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert!(matches!(StudyConfig::from_toml("horizn = 4"), Err(Error::Config(_))));
        assert!(matches!(
            StudyConfig::from_toml("[problem]\nbudget = -1.0"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            StudyConfig::from_toml("[solver]\nbackend = \"command\""),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn most_specific_equity_wins() {
        let (net, _) = ieee33();
        let c =
            StudyConfig::from_toml("[equity]\ndefault = 0.1\nclass = { low = 0.02 }\nbus = { \"2\" = 0.5 }").unwrap();
        let e = c.equity.resolve(&net).unwrap();
        for b in net.buses() {
            let want = if b.id == 2 {
                0.5
            } else if b.is_low_income() {
                0.02
            } else {
                0.1
            };
            assert_eq!(e[b.id - 1], want, "bus {}", b.id);
        }
        let bad = StudyConfig::from_toml("[equity]\nbus = { \"99\" = 0.5 }").unwrap();
        assert!(bad.equity.resolve(&net).is_err());
    }
}
