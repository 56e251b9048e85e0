//! Solution-file readers.
//!
//! Two dialects are understood:
//!
//! * **Line**: `status <word>`, optional `objective <value>` (or a Gurobi
//!   style `# Objective value = <value>` comment), then one `<name> <value>`
//!   pair per line. A file with values but no status line is read as optimal.
//! * **Xml**: CPLEX `.sol` style: a `<header ... objectiveValue="..."
//!   solutionStatusString="..."/>` element and one `<variable name="..."
//!   value="..."/>` element per column.
//!
//! Status words map as: `optimal`; `feasible`; `infeasible`;
//! `unbounded`; `timeout` / `time limit`. In the XML dialect the status string
//! is matched by substring in that order of precedence: "infeasible",
//! "unbounded", "time limit", "optimal", "feasible".

use std::collections::HashMap;

use super::mps::unescape_name;
use super::SolveStatus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionDialect {
    #[default]
    Line,
    Xml,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: HashMap<String, f64>,
    pub note: String,
}

fn status_word(word: &str) -> Result<SolveStatus> {
    let w = word.to_ascii_lowercase();
    if w.contains("infeasible") {
        Ok(SolveStatus::Infeasible)
    } else if w.contains("unbounded") {
        Ok(SolveStatus::Unbounded)
    } else if w.contains("time") {
        Ok(SolveStatus::Timeout)
    } else if w.contains("optimal") {
        Ok(SolveStatus::Optimal)
    } else if w.contains("feasible") {
        Ok(SolveStatus::Feasible)
    } else {
        Err(Error::Solver(format!("solver reported status `{word}`")))
    }
}

pub fn parse_solution(text: &str, dialect: SolutionDialect) -> Result<RawSolution> {
    match dialect {
        SolutionDialect::Line => parse_line(text),
        SolutionDialect::Xml => parse_xml(text),
    }
}

fn parse_line(text: &str) -> Result<RawSolution> {
    let mut status = None;
    let mut objective = None;
    let mut values = HashMap::new();
    let mut note = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            if let Some(v) = c
                .strip_prefix("Objective value =")
                .or_else(|| c.strip_prefix("Objective value:"))
            {
                objective = v.trim().parse().ok();
            } else {
                note.push_str(c);
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(
                "solution",
                i + 1,
                format!("expected `<name> <value>`: {line}"),
            ));
        };
        match a {
            "status" if values.is_empty() => status = Some(status_word(b)?),
            "objective" if values.is_empty() => {
                objective = Some(
                    b.parse()
                        .map_err(|_| Error::parse("solution", i + 1, format!("bad objective {b}")))?,
                )
            }
            _ => {
                let v: f64 = b
                    .parse()
                    .map_err(|_| Error::parse("solution", i + 1, format!("bad value {b}")))?;
                values.insert(unescape_name(a)?, v);
            }
        }
    }
    let status = match status {
        Some(s) => s,
        None if !values.is_empty() => SolveStatus::Optimal,
        None => return Err(Error::Solver("solution file has neither status nor values".into())),
    };
    Ok(RawSolution {
        status,
        objective,
        values,
        note,
    })
}

fn attr<'a>(tag: &'a str, key: &str) -> Option<&'a str> {
    let pat = format!("{key}=\"");
    let start = tag.find(&pat)? + pat.len();
    let end = tag[start..].find('"')? + start;
    Some(&tag[start..end])
}

fn xml_unescape(s: &str) -> String {
    s.replace("&quot;", "\"")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

fn parse_xml(text: &str) -> Result<RawSolution> {
    let mut status = None;
    let mut objective = None;
    let mut values = HashMap::new();
    for tag in text.split('<').skip(1) {
        let tag = tag.split('>').next().unwrap_or("");
        if tag.starts_with("header") {
            if let Some(s) = attr(tag, "solutionStatusString") {
                status = Some(status_word(s)?);
            }
            if let Some(v) = attr(tag, "objectiveValue") {
                objective = v.parse().ok();
            }
        } else if tag.starts_with("variable ") {
            let name = attr(tag, "name").ok_or_else(|| Error::Solver("xml variable without name".into()))?;
            let value = attr(tag, "value")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Solver(format!("xml variable {name} without value")))?;
            values.insert(unescape_name(&xml_unescape(name))?, value);
        }
    }
    let status = status.ok_or_else(|| Error::Solver("xml solution without header status".into()))?;
    Ok(RawSolution {
        status,
        objective,
        values,
        note: String::new(),
    })
}
