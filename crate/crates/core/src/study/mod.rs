//! End-to-end study driver: generate → reduce → plan → evaluate → report.
//!
//! Every command reads its inputs from and writes its artifacts to the
//! output directory, followed by a `<command>.manifest.json` that records
//! the resolved configuration, input hashes, seeds and tool version.

mod config;

pub use config::{BackendKind, EquityConfig, ReductionConfig, SolverConfig, StudyConfig, TestConfig};

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluate::{
    describe, elsi_csv, equity_cost, evaluate_plan, fmt_e, reduction_report, summary_csv, EvaluationReport, SummaryRow,
};
use crate::milp::{solve_planning_from, uniform_equity, Plan, PlanningOutcome, PlanningProblem};
use crate::netmodel::{ieee33, load_case, write_case, LoadProfile, Network};
use crate::reduce::{baseline_features, reduce, wcss_csv, write_features};
use crate::scengen::{build_scenarios, read_scenarios, sample_test_scenarios, write_scenarios, ScenarioSet};
use crate::solver::SolveStatus;

pub const SCENARIOS_FILE: &str = "scenarios.json";
pub const TEST_FILE: &str = "test.json";
pub const REDUCED_FILE: &str = "reduced.json";
pub const FEATURES_FILE: &str = "features.csv";
pub const WCSS_FILE: &str = "wcss.csv";
pub const PLAN_FILE: &str = "plan.csv";
pub const PLAN_SUMMARY_FILE: &str = "plan.json";
pub const ELSI_FILE: &str = "elsi.csv";
pub const EVAL_FILE: &str = "eval.json";
pub const EVAL_TEXT_FILE: &str = "eval.txt";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_TEXT_FILE: &str = "summary.txt";
pub const SWEEP_DIR: &str = "sweep";

/// Process exit code for an error: 2 configuration, 3 data, 4 solver,
/// 5 infeasible.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::UnknownLine(_)
        | Error::MissingArtifact(_)
        | Error::FingerprintMismatch(..)
        | Error::Io(_)
        | Error::Json(_) => 3,
        Error::Solver(_) | Error::Integrality { .. } => 4,
        Error::Infeasible(_) => 5,
        Error::Scenario { source, .. } => exit_code(source),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRef {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: serde_json::Value,
    pub case_sha256: String,
    pub seeds: Seeds,
    pub config: StudyConfig,
    pub inputs: Vec<ArtifactRef>,
    pub outputs: Vec<ArtifactRef>,
    pub results: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub scenarios: u64,
    pub reduction: u64,
    pub test: u64,
}

/// Planning result as written next to the plan file.
#[derive(Debug, Clone, Serialize)]
pub struct PlanSummary {
    pub e: String,
    pub status: SolveStatus,
    pub objective: f64,
    pub unserved_cost: f64,
    pub equity_penalty: f64,
    pub investment_cost: f64,
    pub units: Vec<(usize, f64)>,
    /// ε by bus (index = bus − 1).
    pub eps: Vec<f64>,
    /// ELSI on the planning scenarios.
    pub elsi: Vec<f64>,
}

pub struct Study {
    pub config: StudyConfig,
    pub net: Network,
    pub profile: LoadProfile,
    case_sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Study {
    pub fn new(config: StudyConfig) -> Result<Self> {
        config.validate()?;
        let (net, full) = if config.case == "ieee33" {
            ieee33()
        } else {
            let path = Path::new(&config.case);
            if !path.exists() {
                return Err(Error::MissingArtifact(path.to_path_buf()));
            }
            load_case(path)?
        };
        let profile = match config.horizon {
            Some(t) => full.window(t).map_err(|e| Error::Config(e.to_string()))?,
            None => full,
        };
        let case_sha256 = sha256_hex(write_case(&net, &profile).as_bytes());
        Ok(Study {
            config,
            net,
            profile,
            case_sha256,
        })
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.config.output.join(name)
    }

    fn artifact(&self, name: &str) -> Result<ArtifactRef> {
        let bytes = std::fs::read(self.out(name))?;
        Ok(ArtifactRef {
            path: name.to_string(),
            sha256: sha256_hex(&bytes),
        })
    }

    fn require(&self, name: &str) -> Result<PathBuf> {
        let p = self.out(name);
        if !p.exists() {
            return Err(Error::MissingArtifact(p));
        }
        Ok(p)
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let p = self.out(name);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(p, text)?;
        Ok(())
    }

    fn manifest(
        &self,
        command: &str,
        args: serde_json::Value,
        inputs: &[&str],
        outputs: &[String],
        results: serde_json::Value,
    ) -> Result<()> {
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args,
            case_sha256: self.case_sha256.clone(),
            seeds: Seeds {
                scenarios: self.config.scenarios.seed,
                reduction: self.config.reduction.seed,
                test: self.config.test.seed,
            },
            config: self.config.clone(),
            inputs: inputs.iter().map(|n| self.artifact(n)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|n| self.artifact(n)).collect::<Result<_>>()?,
            results,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        self.write(&format!("{command}.manifest.json"), &text)
    }

    fn read_set(&self, name: &str) -> Result<ScenarioSet> {
        let set = read_scenarios(self.require(name)?)?;
        if set.horizon() != self.profile.horizon() {
            return Err(Error::Validation(format!(
                "{name} has horizon {}, the study uses {}",
                set.horizon(),
                self.profile.horizon()
            )));
        }
        if set.scenarios.iter().any(|s| s.tau.len() != self.net.n_buses()) {
            return Err(Error::Validation(format!("{name} does not match the case's bus count")));
        }
        Ok(set)
    }

    /// Full scenario set plus the held-out test sample.
    pub fn gen(&self) -> Result<(ScenarioSet, ScenarioSet)> {
        std::fs::create_dir_all(&self.config.output)?;
        let set = build_scenarios(&self.net, &self.profile, &self.config.scenarios)?;
        let n_test = self.config.test.n_test.min(set.len());
        if n_test < self.config.test.n_test {
            log::warn!("test sample capped at the {} generated scenarios", set.len());
        }
        let test = sample_test_scenarios(&set, n_test, self.config.test.seed, self.net.n_buses())?;
        write_scenarios(self.out(SCENARIOS_FILE), &set, "scenarios", false)?;
        write_scenarios(self.out(TEST_FILE), &test, "test", false)?;
        log::info!("{} scenarios, {} test scenarios", set.len(), test.len());
        self.manifest(
            "gen",
            serde_json::json!({}),
            &[],
            &[SCENARIOS_FILE.into(), TEST_FILE.into()],
            serde_json::json!({
                "scenarios": set.len(),
                "test": test.len(),
                "fingerprint": set.fingerprint(),
                "test_fingerprint": test.fingerprint(),
            }),
        )?;
        Ok((set, test))
    }

    pub fn reduce(&self) -> Result<crate::reduce::Reduction> {
        let set = self.read_set(SCENARIOS_FILE)?;
        let solve = self.config.solver.options()?;
        let features = baseline_features(
            &self.net,
            &self.profile,
            &set.scenarios,
            &solve,
            self.config.reduction.screen,
        )?;
        write_features(self.out(FEATURES_FILE), &features)?;
        let r = reduce(&set, &features, &self.config.reduction.options())?;
        self.write(WCSS_FILE, &wcss_csv(&r.curve))?;
        write_scenarios(self.out(REDUCED_FILE), &r.reduced, "reduced", false)?;
        log::info!("reduced {} scenarios to {}", set.len(), r.reduced.len());
        let elbow = r
            .elbow
            .as_ref()
            .map(|e| serde_json::json!({ "k": e.k, "distance": e.distance, "no_elbow": e.no_elbow }));
        self.manifest(
            "reduce",
            serde_json::json!({}),
            &[SCENARIOS_FILE],
            &[FEATURES_FILE.into(), WCSS_FILE.into(), REDUCED_FILE.into()],
            serde_json::json!({
                "k": r.reduced.len(),
                "elbow": elbow,
                "fingerprint": r.reduced.fingerprint(),
            }),
        )?;
        Ok(r)
    }

    fn solve_plan(&self, reduced: &ScenarioSet, equity: Vec<f64>, candidates: &[Plan]) -> Result<PlanningOutcome> {
        let prob = PlanningProblem::new(
            self.net.clone(),
            self.profile.clone(),
            reduced.clone(),
            self.config.problem.clone(),
        )
        .with_equity(equity);
        let out = solve_planning_from(&prob, &self.config.solver.options()?, candidates)?;
        if out.status == SolveStatus::Timeout {
            log::warn!("planning stopped at the time limit; the plan may be suboptimal");
        }
        Ok(out)
    }

    fn plan_summary(&self, e: &str, out: &PlanningOutcome) -> PlanSummary {
        PlanSummary {
            e: e.into(),
            status: out.status,
            objective: out.objective,
            unserved_cost: out.unserved_cost,
            equity_penalty: out.equity_penalty,
            investment_cost: out.plan.investment_cost(&self.config.problem),
            units: out.plan.units(),
            eps: out.eps.clone(),
            elsi: out.elsi.clone(),
        }
    }

    /// Plans on the reduced set. `uniform` replaces the configured equity
    /// criteria with one value for every bus.
    pub fn plan(&self, uniform: Option<f64>) -> Result<PlanningOutcome> {
        let reduced = self.read_set(REDUCED_FILE)?;
        let (equity, label) = match uniform {
            Some(e) => (uniform_equity(&self.net, e), fmt_e(e)),
            None => (self.config.equity.resolve(&self.net)?, "config".to_string()),
        };
        let out = self.solve_plan(&reduced, equity, &[])?;
        out.plan.write(self.out(PLAN_FILE))?;
        let summary = self.plan_summary(&label, &out);
        self.write(PLAN_SUMMARY_FILE, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
        log::info!("plan: {:?}, objective {}", out.plan.units(), out.objective);
        self.manifest(
            "plan",
            serde_json::json!({ "e": uniform.map(fmt_e) }),
            &[REDUCED_FILE],
            &[PLAN_FILE.into(), PLAN_SUMMARY_FILE.into()],
            serde_json::json!({ "status": out.status, "objective": out.objective }),
        )?;
        Ok(out)
    }

    fn evaluate(&self, plan: &Plan, test: &ScenarioSet) -> Result<EvaluationReport> {
        evaluate_plan(
            plan,
            test,
            &self.net,
            &self.profile,
            &self.config.problem,
            &self.config.eval_options()?,
        )
    }

    /// Scores a plan file (default: the `plan` output) on the test set,
    /// with an optional reference plan for the equity cost.
    pub fn eval(&self, plan_path: Option<&Path>, reference: Option<&Path>) -> Result<EvaluationReport> {
        let test = self.read_set(TEST_FILE)?;
        let plan_path = match plan_path {
            Some(p) => p.to_path_buf(),
            None => self.require(PLAN_FILE)?,
        };
        let plan = Plan::read(&plan_path)?;
        plan.validate(&self.net, &self.config.problem)?;
        let report = self.evaluate(&plan, &test)?;
        let no_dg = self.evaluate(&Plan::empty(self.net.n_buses()), &test)?;
        let red = reduction_report(&report, &no_dg)?;
        let mut text = describe(&self.net, &report);
        text.push_str(&format!(
            "system shed reduction vs no DG: {:.2}%\n",
            red.system_shed_reduction_pct
        ));
        let mut outputs = vec![ELSI_FILE.to_string(), EVAL_FILE.to_string(), EVAL_TEXT_FILE.to_string()];
        let mut eq = None;
        if let Some(r) = reference {
            let ref_plan = Plan::read(r)?;
            let ref_report = self.evaluate(&ref_plan, &test)?;
            let c = equity_cost(&report, &ref_report)?;
            text.push_str(&format!(
                "equity cost vs reference: ${:.2} (ratio {:.4})\n",
                c.cost, c.ratio
            ));
            eq = Some(c);
        }
        self.write(ELSI_FILE, &elsi_csv(&self.net, &report, Some(&red)))?;
        self.write(EVAL_FILE, &(serde_json::to_string_pretty(&report)? + "\n"))?;
        self.write(EVAL_TEXT_FILE, &text)?;
        if let Some(c) = eq {
            let row = SummaryRow {
                plan: plan_path.display().to_string(),
                e: None,
                expected_cost: report.expected_unserved_cost,
                equity_cost: c.cost,
                equity_cost_ratio: c.ratio,
            };
            self.write(SUMMARY_FILE, &summary_csv(&[row]))?;
            outputs.push(SUMMARY_FILE.into());
        }
        self.manifest(
            "eval",
            serde_json::json!({
                "plan": plan_path.display().to_string(),
                "reference": reference.map(|r| r.display().to_string()),
            }),
            &[TEST_FILE],
            &outputs,
            serde_json::json!({
                "expected_unserved_cost": report.expected_unserved_cost,
                "system_shed_reduction_pct": red.system_shed_reduction_pct,
            }),
        )?;
        Ok(report)
    }

    /// The E-sweep: plan and evaluate for every uniform criterion, the
    /// reference case (`inf`) included once.
    pub fn report(&self) -> Result<Vec<SummaryRow>> {
        let reduced = self.read_set(REDUCED_FILE)?;
        let test = self.read_set(TEST_FILE)?;
        let mut outputs = Vec::new();
        // loosest first: each plan is a feasible start for the tighter runs
        let values = self.config.equity.sweep_values();
        let mut plans: Vec<Plan> = Vec::new();
        let mut outcomes = Vec::new();
        for &e in values.iter().rev() {
            log::info!("E = {}: planning", fmt_e(e));
            let out = self.solve_plan(&reduced, uniform_equity(&self.net, e), &plans)?;
            plans.push(out.plan.clone());
            outcomes.push(out);
        }
        outcomes.reverse();
        let mut runs = Vec::new();
        for (&e, out) in values.iter().zip(&outcomes) {
            let tag = fmt_e(e);
            let plan_name = format!("{SWEEP_DIR}/plan_e{tag}.csv");
            self.write(&plan_name, &out.plan.to_csv())?;
            let json_name = format!("{SWEEP_DIR}/plan_e{tag}.json");
            self.write(
                &json_name,
                &(serde_json::to_string_pretty(&self.plan_summary(&tag, out))? + "\n"),
            )?;
            let seen = outcomes.iter().zip(&runs).find(|(o, _)| o.plan == out.plan);
            let report = match seen {
                Some((_, (_, r))) => EvaluationReport::clone(r),
                None => {
                    log::info!("E = {tag}: evaluating {:?}", out.plan.units());
                    self.evaluate(&out.plan, &test)?
                }
            };
            outputs.push(plan_name);
            outputs.push(json_name);
            runs.push((e, report));
        }
        let no_dg = self.evaluate(&Plan::empty(self.net.n_buses()), &test)?;
        let reference = &runs.last().expect("sweep includes inf").1;
        let mut rows = Vec::new();
        let mut text = String::new();
        for (e, report) in &runs {
            let tag = fmt_e(*e);
            let c = equity_cost(report, reference)?;
            let red = reduction_report(report, &no_dg)?;
            let elsi_name = format!("{SWEEP_DIR}/elsi_e{tag}.csv");
            self.write(&elsi_name, &elsi_csv(&self.net, report, Some(&red)))?;
            outputs.push(elsi_name);
            let plan = if e.is_infinite() {
                "ref. case".to_string()
            } else {
                format!("eec_{tag}")
            };
            text.push_str(&format!("== E = {tag} ({plan}) ==\n"));
            text.push_str(&describe(&self.net, report));
            text.push_str(&format!(
                "system shed reduction vs no DG: {:.2}%\nequity cost: ${:.2} (ratio {:.4})\n\n",
                red.system_shed_reduction_pct, c.cost, c.ratio
            ));
            rows.push(SummaryRow {
                plan,
                e: Some(*e),
                expected_cost: report.expected_unserved_cost,
                equity_cost: c.cost,
                equity_cost_ratio: c.ratio,
            });
        }
        self.write(SUMMARY_FILE, &summary_csv(&rows))?;
        self.write(SUMMARY_TEXT_FILE, &text)?;
        outputs.push(SUMMARY_FILE.into());
        outputs.push(SUMMARY_TEXT_FILE.into());
        self.manifest(
            "report",
            serde_json::json!({}),
            &[REDUCED_FILE, TEST_FILE],
            &outputs,
            serde_json::to_value(&rows)?,
        )?;
        Ok(rows)
    }
}
