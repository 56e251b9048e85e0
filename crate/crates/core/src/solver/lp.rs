//! CPLEX-LP text writer. Write-only; MPS is the round-trip format.

use std::fmt::Write as _;

use super::mps::{escape_name, fmt_num};
use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense, VarKind};

const TERMS_PER_LINE: usize = 8;

pub(crate) fn lp_name(name: &str) -> String {
    let base = escape_name(name);
    let mut out = String::with_capacity(base.len());
    for (i, c) in base.chars().enumerate() {
        let leading_bad = i == 0 && (c.is_ascii_digit() || c == '.');
        if leading_bad || matches!(c, '[' | ']' | ':' | '+' | '-') {
            let _ = write!(out, "%{:02X}", c as u32);
        } else {
            out.push(c);
        }
    }
    out
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    let mut any = false;
    for (i, (name, c)) in terms.enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {name}", fmt_num(c.abs()));
        any = true;
    }
    if !any {
        out.push_str(" 0");
    }
}

pub fn write_lp(model: &MilpModel) -> Result<String> {
    let names: Vec<String> = model.vars().iter().map(|v| lp_name(&v.name)).collect();
    {
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(Error::InvalidArgument(format!("name collision after escaping: {n}")));
            }
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", lp_name(&model.name));
    out.push_str("Minimize\n obj:");
    write_terms(
        &mut out,
        model
            .objective()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, &c)| (names[j].clone(), c)),
    );
    if model.obj_constant != 0.0 {
        let sign = if model.obj_constant < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {}", fmt_num(model.obj_constant.abs()));
    }
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", lp_name(&c.name));
        write_terms(&mut out, c.terms.iter().map(|&(v, k)| (names[v.0].clone(), k)));
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (v, n) in model.vars().iter().zip(&names) {
        if v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0 {
            continue;
        }
        match (v.lower, v.upper) {
            (l, u) if l == u => {
                let _ = writeln!(out, " {n} = {}", fmt_num(l));
            }
            (f64::NEG_INFINITY, f64::INFINITY) => {
                let _ = writeln!(out, " {n} free");
            }
            (l, u) => {
                let lo = if l == f64::NEG_INFINITY {
                    "-inf".to_string()
                } else {
                    fmt_num(l)
                };
                let hi = if u == f64::INFINITY {
                    "+inf".to_string()
                } else {
                    fmt_num(u)
                };
                let _ = writeln!(out, " {lo} <= {n} <= {hi}");
            }
        }
    }
    let generals: Vec<&String> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Integer)
        .map(|(_, n)| n)
        .collect();
    let binaries: Vec<&String> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    for (title, list) in [("Generals", generals), ("Binaries", binaries)] {
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in list.chunks(TERMS_PER_LINE) {
            let line: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(out, " {}", line.join(" "));
        }
    }
    out.push_str("End\n");
    Ok(out)
}
