//! Free-format MPS writer and reader.
//!
//! Supported subset: sections `NAME`, `ROWS`, `COLUMNS` (with `INTORG` /
//! `INTEND` markers), `RHS`, `BOUNDS`, `ENDATA`, and `OBJSENSE MIN`. The
//! objective row is `OBJ`; its RHS entry holds the negated objective constant.
//! Bound types `UP LO FX FR MI PL BV LI UI` are understood. Names are escaped
//! with [`escape_name`] so they never contain whitespace.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::milp::{LinExpr, MilpModel, Sense, VarId, VarKind};

pub(crate) const OBJ_ROW: &str = "OBJ";

fn name_char_ok(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_[](),.:+-".contains(c)
}

/// Percent-escapes every byte outside `[A-Za-z0-9_[](),.:+-]`.
pub fn escape_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if name_char_ok(c) {
            out.push(c);
        } else {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        }
    }
    if out.is_empty() {
        out.push_str("%00");
    }
    out
}

pub fn unescape_name(name: &str) -> Result<String> {
    if name == "%00" {
        return Ok(String::new());
    }
    let bytes = name.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = name
                .get(i + 1..i + 3)
                .ok_or_else(|| Error::InvalidArgument(format!("bad escape in `{name}`")))?;
            out.push(
                u8::from_str_radix(hex, 16).map_err(|_| Error::InvalidArgument(format!("bad escape in `{name}`")))?,
            );
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::InvalidArgument(format!("bad escape in `{name}`")))
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

pub fn write_mps(model: &MilpModel) -> Result<String> {
    let mut col_names = Vec::with_capacity(model.n_vars());
    let mut seen = HashMap::new();
    for v in model.vars() {
        let esc = escape_name(&v.name);
        if seen.insert(esc.clone(), ()).is_some() {
            return Err(Error::InvalidArgument(format!("name collision after escaping: {esc}")));
        }
        col_names.push(esc);
    }
    let mut row_names = Vec::with_capacity(model.n_constraints());
    seen.clear();
    seen.insert(OBJ_ROW.to_string(), ());
    for c in model.constraints() {
        let esc = escape_name(&c.name);
        if seen.insert(esc.clone(), ()).is_some() {
            return Err(Error::InvalidArgument(format!("row name collision: {esc}")));
        }
        row_names.push(esc);
    }

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.n_vars()];
    for (r, c) in model.constraints().iter().enumerate() {
        for &(v, coef) in &c.terms {
            columns[v.0].push((r, coef));
        }
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "NAME {}",
        escape_name(if model.name.is_empty() { "model" } else { &model.name })
    );
    let _ = writeln!(out, "OBJSENSE\n    MIN");
    let _ = writeln!(out, "ROWS\n N {OBJ_ROW}");
    for (c, name) in model.constraints().iter().zip(&row_names) {
        let t = match c.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        let _ = writeln!(out, " {t} {name}");
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    let mut marker = 0;
    for (j, v) in model.vars().iter().enumerate() {
        let int = v.kind.is_integral();
        if int != in_int {
            let tag = if int { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, " MARKER{marker} 'MARKER' '{tag}'");
            marker += 1;
            in_int = int;
        }
        let name = &col_names[j];
        let obj = model.objective()[j];
        if obj != 0.0 || columns[j].is_empty() {
            let _ = writeln!(out, " {name} {OBJ_ROW} {}", fmt_num(obj));
        }
        for &(r, coef) in &columns[j] {
            let _ = writeln!(out, " {name} {} {}", row_names[r], fmt_num(coef));
        }
    }
    if in_int {
        let _ = writeln!(out, " MARKER{marker} 'MARKER' 'INTEND'");
    }
    let _ = writeln!(out, "RHS");
    if model.obj_constant != 0.0 {
        let _ = writeln!(out, " RHS {OBJ_ROW} {}", fmt_num(-model.obj_constant));
    }
    for (c, name) in model.constraints().iter().zip(&row_names) {
        if c.rhs != 0.0 {
            let _ = writeln!(out, " RHS {name} {}", fmt_num(c.rhs));
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for (v, name) in model.vars().iter().zip(&col_names) {
        match v.kind {
            // a fixed binary as a BV plus FX pair trips duplicate-bound
            // handling in some readers
            VarKind::Binary if v.lower == v.upper => {
                let _ = writeln!(out, " LI BND {name} {}", fmt_num(v.lower));
                let _ = writeln!(out, " UI BND {name} {}", fmt_num(v.upper));
            }
            VarKind::Binary => {
                let _ = writeln!(out, " BV BND {name}");
            }
            _ if v.lower == v.upper => {
                let _ = writeln!(out, " FX BND {name} {}", fmt_num(v.lower));
            }
            VarKind::Integer => {
                let _ = writeln!(out, " LI BND {name} {}", fmt_num(v.lower));
                let _ = writeln!(out, " UI BND {name} {}", fmt_num(v.upper));
            }
            VarKind::Continuous => {
                if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
                    let _ = writeln!(out, " FR BND {name}");
                    continue;
                }
                if v.lower == f64::NEG_INFINITY {
                    let _ = writeln!(out, " MI BND {name}");
                } else if v.lower != 0.0 {
                    let _ = writeln!(out, " LO BND {name} {}", fmt_num(v.lower));
                }
                if v.upper != f64::INFINITY {
                    let _ = writeln!(out, " UP BND {name} {}", fmt_num(v.upper));
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    ObjSense,
}

struct ColBuild {
    name: String,
    integer: bool,
    binary: bool,
    /// Fixed by an `FX` bound rather than an `LI`/`UI` pair.
    fx: bool,
    lower: f64,
    upper: Option<f64>,
    entries: Vec<(String, f64)>,
}

pub fn parse_mps(text: &str) -> Result<MilpModel> {
    let err = |line: usize, msg: String| Error::parse("mps", line, msg);
    let mut name = String::new();
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_pos: HashMap<String, usize> = HashMap::new();
    let mut rhs: HashMap<String, f64> = HashMap::new();
    let mut cols: Vec<ColBuild> = Vec::new();
    let mut col_pos: HashMap<String, usize> = HashMap::new();
    let mut integer = false;
    let mut ended = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tok: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match tok[0] {
                "NAME" => {
                    name = tok.get(1).map(|s| unescape_name(s)).transpose()?.unwrap_or_default();
                    Section::None
                }
                "OBJSENSE" => match tok.get(1) {
                    Some(&"MIN") | Some(&"MINIMIZE") => Section::None,
                    Some(other) => return Err(err(lineno, format!("unsupported objective sense {other}"))),
                    None => Section::ObjSense,
                },
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(lineno, format!("unsupported section {other}"))),
            };
            continue;
        }
        let num = |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|_| err(lineno, format!("not a number: {s}"))) };
        match section {
            Section::ObjSense => {
                if !matches!(tok[0], "MIN" | "MINIMIZE") {
                    return Err(err(lineno, format!("unsupported objective sense {}", tok[0])));
                }
            }
            Section::Rows => {
                if tok.len() != 2 {
                    return Err(err(lineno, "row line needs type and name".into()));
                }
                let sense = match tok[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(tok[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "E" => Sense::Eq,
                    "G" => Sense::Ge,
                    other => return Err(err(lineno, format!("unknown row type {other}"))),
                };
                row_pos.insert(tok[1].to_string(), rows.len());
                rows.push((tok[1].to_string(), sense));
            }
            Section::Columns => {
                if tok.len() >= 3 && tok[1] == "'MARKER'" {
                    integer = match tok[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        other => return Err(err(lineno, format!("unknown marker {other}"))),
                    };
                    continue;
                }
                if tok.len() < 3 || tok.len().is_multiple_of(2) {
                    return Err(err(lineno, "column line needs name and (row, value) pairs".into()));
                }
                let idx = *col_pos.entry(tok[0].to_string()).or_insert_with(|| {
                    cols.push(ColBuild {
                        name: tok[0].to_string(),
                        integer,
                        binary: false,
                        fx: false,
                        lower: 0.0,
                        upper: None,
                        entries: Vec::new(),
                    });
                    cols.len() - 1
                });
                for pair in tok[1..].chunks(2) {
                    cols[idx].entries.push((pair[0].to_string(), num(pair[1])?));
                }
            }
            Section::Rhs => {
                let pairs = if tok.len() % 2 == 1 { &tok[1..] } else { &tok[..] };
                for pair in pairs.chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(lineno, "malformed RHS entry".into()));
                    }
                    rhs.insert(pair[0].to_string(), num(pair[1])?);
                }
            }
            Section::Bounds => {
                if tok.len() < 3 {
                    return Err(err(lineno, "malformed bound".into()));
                }
                let idx = *col_pos
                    .get(tok[2])
                    .ok_or_else(|| err(lineno, format!("bound on unknown column {}", tok[2])))?;
                let val = tok.get(3).map(|s| num(s)).transpose()?;
                let need = || val.ok_or_else(|| err(lineno, format!("{} bound needs a value", tok[0])));
                let col = &mut cols[idx];
                match tok[0] {
                    "UP" => col.upper = Some(need()?),
                    "LO" => col.lower = need()?,
                    "FX" => {
                        col.fx = true;
                        col.lower = need()?;
                        col.upper = Some(need()?);
                    }
                    "FR" => {
                        col.lower = f64::NEG_INFINITY;
                        col.upper = Some(f64::INFINITY);
                    }
                    "MI" => col.lower = f64::NEG_INFINITY,
                    "PL" => col.upper = Some(f64::INFINITY),
                    "BV" => {
                        col.integer = true;
                        col.binary = true;
                        col.lower = 0.0;
                        col.upper = Some(1.0);
                    }
                    "LI" => {
                        col.integer = true;
                        col.lower = need()?;
                    }
                    "UI" => {
                        col.integer = true;
                        col.upper = Some(need()?);
                    }
                    other => return Err(err(lineno, format!("unsupported bound type {other}"))),
                }
            }
            Section::None => return Err(err(lineno, "data outside a section".into())),
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let obj_row = obj_row.unwrap_or_else(|| OBJ_ROW.to_string());
    let mut model = MilpModel::new(name);
    let mut row_terms: Vec<LinExpr> = vec![LinExpr::new(); rows.len()];
    for col in &cols {
        let fixed01 = !col.fx && col.upper == Some(col.lower) && (col.lower == 0.0 || col.lower == 1.0);
        let kind = match (col.integer, col.binary) {
            (true, true) => VarKind::Binary,
            (true, false) if fixed01 => VarKind::Binary,
            (true, false) => VarKind::Integer,
            _ => VarKind::Continuous,
        };
        let v: VarId = model.add_var(
            unescape_name(&col.name)?,
            kind,
            col.lower,
            col.upper.unwrap_or(f64::INFINITY),
        )?;
        for (row, coef) in &col.entries {
            if *row == obj_row {
                model.add_objective(v, *coef);
            } else {
                let r = *row_pos
                    .get(row)
                    .ok_or_else(|| Error::parse("mps", 0, format!("unknown row {row}")))?;
                row_terms[r].add(v, *coef);
            }
        }
    }
    for ((rname, sense), expr) in rows.iter().zip(row_terms) {
        let b = rhs.get(rname).copied().unwrap_or(0.0);
        model.add_constraint(unescape_name(rname)?, expr, *sense, b)?;
    }
    model.obj_constant = -rhs.get(&obj_row).copied().unwrap_or(0.0);
    Ok(model)
}
