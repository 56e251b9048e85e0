//! Bridge to external MILP solvers through files and process invocation.
//!
//! The command template is split on whitespace; each word may contain the
//! placeholders `{model}`, `{solution}`, `{time_limit}`, `{mip_gap}`,
//! `{threads}`, `{start_opt}` and `{shim}` (path of the bundled HiGHS driver
//! script, written next to the model). `{start_opt}` becomes
//! `--start=<file>` when a starting point is supplied and disappears
//! otherwise; the file holds `<column name> <value>` lines. Batch templates use `{jobs}`, a file of
//! `<model> <solution>` lines. `DGPLAN_SOLVER_CMD` and
//! `DGPLAN_SOLVER_BATCH_CMD` override the defaults; `DGPLAN_PYTHON` picks the
//! interpreter for the default HiGHS driver.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::lp::lp_name;
use super::mps::{escape_name, fmt_num, unescape_name};
use super::{parse_solution, write_lp, write_mps, Solution, SolutionDialect, SolveOptions};
use crate::error::{Error, Result};
use crate::milp::MilpModel;

const HIGHS_SHIM: &str = include_str!("../../tools/highs_solve.py");
const BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFormat {
    #[default]
    Mps,
    Lp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSolver {
    pub command: String,
    pub batch_command: Option<String>,
    pub dialect: SolutionDialect,
    pub format: ModelFormat,
    /// Keeps model and solution files here instead of a temporary directory.
    pub keep_dir: Option<PathBuf>,
}

impl Default for ExternalSolver {
    fn default() -> Self {
        Self::highs()
    }
}

impl ExternalSolver {
    /// The bundled HiGHS driver (needs Python with `highspy`).
    pub fn highs() -> Self {
        let py = std::env::var("DGPLAN_PYTHON").unwrap_or_else(|_| "python3".into());
        let flags = "--time-limit {time_limit} --mip-gap {mip_gap} --threads {threads}";
        ExternalSolver {
            command: format!("{py} {{shim}} {{model}} {{solution}} {flags} {{start_opt}}"),
            batch_command: Some(format!("{py} {{shim}} --batch {{jobs}} {flags}")),
            dialect: SolutionDialect::Line,
            format: ModelFormat::Mps,
            keep_dir: None,
        }
    }

    /// Defaults with environment overrides applied.
    pub fn from_env() -> Self {
        let mut s = Self::highs();
        if let Ok(cmd) = std::env::var("DGPLAN_SOLVER_CMD") {
            s.command = cmd;
            s.batch_command = None;
        }
        if let Ok(cmd) = std::env::var("DGPLAN_SOLVER_BATCH_CMD") {
            s.batch_command = Some(cmd);
        }
        s
    }

    pub fn with_command(command: impl Into<String>, dialect: SolutionDialect) -> Self {
        ExternalSolver {
            command: command.into(),
            batch_command: None,
            dialect,
            format: ModelFormat::Mps,
            keep_dir: None,
        }
    }

    /// Whether the default HiGHS driver can run here.
    pub fn highs_available() -> bool {
        let py = std::env::var("DGPLAN_PYTHON").unwrap_or_else(|_| "python3".into());
        Command::new(py)
            .args(["-c", "import highspy"])
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    }

    fn run(&self, template: &str, subst: &HashMap<&str, String>) -> Result<String> {
        let words: Vec<String> = template
            .split_whitespace()
            .map(|w| {
                let mut w = w.to_string();
                for (k, v) in subst {
                    w = w.replace(&format!("{{{k}}}"), v);
                }
                w
            })
            .filter(|w| !w.is_empty())
            .collect();
        let (prog, args) = words
            .split_first()
            .ok_or_else(|| Error::Config("empty solver command".into()))?;
        let out = Command::new(prog)
            .args(args)
            .output()
            .map_err(|e| Error::Solver(format!("cannot run `{prog}`: {e}")))?;
        let log = format!(
            "{}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
        if !out.status.success() {
            let tail: String = log
                .lines()
                .rev()
                .take(20)
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect::<Vec<_>>()
                .join("\n");
            return Err(Error::Solver(format!("`{prog}` exited with {}: {tail}", out.status)));
        }
        Ok(log)
    }
}

fn write_model(model: &MilpModel, format: ModelFormat, dir: &Path, stem: &str) -> Result<PathBuf> {
    let (text, ext) = match format {
        ModelFormat::Mps => (write_mps(model)?, "mps"),
        ModelFormat::Lp => (write_lp(model)?, "lp"),
    };
    let path = dir.join(format!("{stem}.{ext}"));
    std::fs::write(&path, text)?;
    Ok(path)
}

fn base_subst(opts: &SolveOptions, dir: &Path) -> Result<HashMap<&'static str, String>> {
    let shim = dir.join("highs_solve.py");
    if !shim.exists() {
        std::fs::write(&shim, HIGHS_SHIM)?;
    }
    Ok(HashMap::from([
        ("time_limit", format!("{}", opts.time_limit_s)),
        ("mip_gap", format!("{}", opts.mip_gap)),
        ("threads", format!("{}", opts.threads.max(1))),
        ("shim", shim.display().to_string()),
        ("start_opt", String::new()),
    ]))
}

/// Maps a solver's solution file back onto model variables.
fn read_solution(model: &MilpModel, path: &Path, dialect: SolutionDialect, log: &str) -> Result<Solution> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Solver(format!("no solution file {}: {e}", path.display())))?;
    let raw = parse_solution(&text, dialect)?;
    let mut log = log.to_string();
    if !raw.note.is_empty() {
        log.push_str(&raw.note);
    }
    if raw.values.is_empty() {
        return Ok(Solution {
            status: raw.status,
            objective: raw.objective,
            values: Vec::new(),
            log,
        });
    }
    let mut values = vec![f64::NAN; model.n_vars()];
    for (name, v) in &raw.values {
        // the line dialect may hand back names still escaped
        let id = model
            .lookup(name)
            .or_else(|| unescape_name(name).ok().and_then(|n| model.lookup(&n)));
        match id {
            Some(id) => values[id.0] = *v,
            None => return Err(Error::Solver(format!("solution names unknown variable {name}"))),
        }
    }
    if let Some(j) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Solver(format!(
            "solution has no value for {}",
            model.vars()[j].name
        )));
    }
    Ok(Solution {
        status: raw.status,
        objective: raw.objective,
        values,
        log,
    })
}

fn work_dir(ext: &ExternalSolver) -> Result<(Option<tempfile::TempDir>, PathBuf)> {
    match &ext.keep_dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            Ok((None, d.clone()))
        }
        None => {
            let t = tempfile::Builder::new().prefix("dgplan-solve").tempdir()?;
            let p = t.path().to_path_buf();
            Ok((Some(t), p))
        }
    }
}

pub fn solve_external(model: &MilpModel, opts: &SolveOptions, ext: &ExternalSolver) -> Result<Solution> {
    solve_external_from(model, opts, ext, None)
}

fn write_start(model: &MilpModel, format: ModelFormat, start: &[f64], path: &Path) -> Result<()> {
    if start.len() != model.n_vars() {
        return Err(Error::InvalidArgument(format!(
            "start has {} values for {} variables",
            start.len(),
            model.n_vars()
        )));
    }
    let mut text = String::new();
    for (v, x) in model.vars().iter().zip(start) {
        let name = match format {
            ModelFormat::Mps => escape_name(&v.name),
            ModelFormat::Lp => lp_name(&v.name),
        };
        text.push_str(&format!("{name} {}\n", fmt_num(*x)));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// As [`solve_external`], passing `start` (by variable index) through
/// `{start_opt}`.
pub fn solve_external_from(
    model: &MilpModel,
    opts: &SolveOptions,
    ext: &ExternalSolver,
    start: Option<&[f64]>,
) -> Result<Solution> {
    let (_guard, dir) = work_dir(ext)?;
    let model_path = write_model(model, ext.format, &dir, "model")?;
    let sol_path = dir.join("model.sol");
    let _ = std::fs::remove_file(&sol_path);
    let mut subst = base_subst(opts, &dir)?;
    if let Some(x) = start {
        let p = dir.join("model.start");
        write_start(model, ext.format, x, &p)?;
        subst.insert("start_opt", format!("--start={}", p.display()));
    }
    subst.insert("model", model_path.display().to_string());
    subst.insert("solution", sol_path.display().to_string());
    let log = ext.run(&ext.command, &subst)?;
    read_solution(model, &sol_path, ext.dialect, &log)
}

pub fn solve_external_many(models: &[MilpModel], opts: &SolveOptions, ext: &ExternalSolver) -> Vec<Result<Solution>> {
    let Some(batch) = &ext.batch_command else {
        return models.iter().map(|m| solve_external(m, opts, ext)).collect();
    };
    let mut out = Vec::with_capacity(models.len());
    for chunk in models.chunks(BATCH_SIZE) {
        match solve_chunk(chunk, opts, ext, batch) {
            Ok(results) => out.extend(results),
            Err(e) => {
                let msg = e.to_string();
                out.extend(chunk.iter().map(|_| Err(Error::Solver(msg.clone()))));
            }
        }
    }
    out
}

fn solve_chunk(
    chunk: &[MilpModel],
    opts: &SolveOptions,
    ext: &ExternalSolver,
    batch: &str,
) -> Result<Vec<Result<Solution>>> {
    let (_guard, dir) = work_dir(ext)?;
    let mut jobs = String::new();
    let mut sols = Vec::with_capacity(chunk.len());
    for (i, m) in chunk.iter().enumerate() {
        let mp = write_model(m, ext.format, &dir, &format!("model{i}"))?;
        let sp = dir.join(format!("model{i}.sol"));
        let _ = std::fs::remove_file(&sp);
        jobs.push_str(&format!("{} {}\n", mp.display(), sp.display()));
        sols.push(sp);
    }
    let jobs_path = dir.join("jobs.txt");
    std::fs::write(&jobs_path, jobs)?;
    let mut subst = base_subst(opts, &dir)?;
    subst.insert("jobs", jobs_path.display().to_string());
    let log = ext.run(batch, &subst)?;
    Ok(chunk
        .iter()
        .zip(&sols)
        .map(|(m, sp)| read_solution(m, sp, ext.dialect, &log))
        .collect())
}
