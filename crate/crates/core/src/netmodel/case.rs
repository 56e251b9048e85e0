//! Case-file reader and writer.
//!
//! A case file is line oriented. `#` starts a comment. Sections are opened by
//! `[system]`, `[buses]`, `[lines]` and `[profile]`. Inside a section,
//! `key = value` lines set scalars; the first other line is a whitespace
//! separated header naming the table columns and every following line is a
//! row. Missing optional values are written as `-`.
//!
//! ```text
//! [system]
//! base_mva = 10
//! v_min = 0.95
//! v_max = 1.05
//! v0 = 1.0
//! v_sub = 1.0
//!
//! [buses]
//! id income_class peak_p_mw peak_q_mvar svc_qmin_mvar svc_qmax_mvar dg_candidate
//! 1  high         0         0           -             -             no
//!
//! [lines]
//! id from to r_pu x_pu s_max_mva kind fault_weight
//!
//! [profile]
//! dt_hours = 1
//! t mp mq
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Bus, BusKind, IncomeClass, Line, LineKind, LoadProfile, Network, Svc, SystemParams};
use crate::error::{Error, Result};

const BUS_COLUMNS: [&str; 7] = [
    "id",
    "income_class",
    "peak_p_mw",
    "peak_q_mvar",
    "svc_qmin_mvar",
    "svc_qmax_mvar",
    "dg_candidate",
];
const LINE_COLUMNS: [&str; 8] = ["id", "from", "to", "r_pu", "x_pu", "s_max_mva", "kind", "fault_weight"];
const PROFILE_COLUMNS: [&str; 3] = ["t", "mp", "mq"];

pub fn load_case(path: impl AsRef<Path>) -> Result<(Network, LoadProfile)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_case(&text, &path.display().to_string())
}

#[derive(Default)]
struct Section {
    line: usize,
    scalars: HashMap<String, (usize, String)>,
    header: Option<Vec<String>>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Section {
    fn scalar(&self, origin: &str, key: &str) -> Result<f64> {
        let (line, raw) = self
            .scalars
            .get(key)
            .ok_or_else(|| Error::parse(origin, self.line, format!("missing key `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::parse(origin, *line, format!("`{key}`: not a number: {raw}")))
    }

    fn columns(&self, origin: &str, required: &[&str]) -> Result<HashMap<String, usize>> {
        let header = self
            .header
            .as_ref()
            .ok_or_else(|| Error::parse(origin, self.line, "missing table header"))?;
        let idx: HashMap<String, usize> = header.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect();
        for col in required {
            if !idx.contains_key(*col) {
                return Err(Error::parse(origin, self.line, format!("missing column `{col}`")));
            }
        }
        Ok(idx)
    }
}

struct Row<'a> {
    origin: &'a str,
    line: usize,
    cells: &'a [String],
    cols: &'a HashMap<String, usize>,
}

impl Row<'_> {
    fn raw(&self, col: &str) -> Result<&str> {
        let i = self.cols[col];
        self.cells
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| Error::parse(self.origin, self.line, format!("missing value for `{col}`")))
    }

    fn num(&self, col: &str) -> Result<f64> {
        let raw = self.raw(col)?;
        raw.parse()
            .map_err(|_| Error::parse(self.origin, self.line, format!("`{col}`: not a number: {raw}")))
    }

    fn opt_num(&self, col: &str) -> Result<Option<f64>> {
        match self.raw(col)? {
            "-" => Ok(None),
            _ => self.num(col).map(Some),
        }
    }

    fn id(&self, col: &str) -> Result<usize> {
        let raw = self.raw(col)?;
        raw.parse()
            .map_err(|_| Error::parse(self.origin, self.line, format!("`{col}`: not an id: {raw}")))
    }

    fn flag(&self, col: &str) -> Result<bool> {
        match self.raw(col)?.to_ascii_lowercase().as_str() {
            "yes" | "true" | "1" => Ok(true),
            "no" | "false" | "0" => Ok(false),
            other => Err(Error::parse(
                self.origin,
                self.line,
                format!("`{col}`: expected yes/no, got {other}"),
            )),
        }
    }
}

fn rows<'a>(origin: &'a str, section: &'a Section, cols: &'a HashMap<String, usize>) -> impl Iterator<Item = Row<'a>> {
    section.rows.iter().map(move |(line, cells)| Row {
        origin,
        line: *line,
        cells,
        cols,
    })
}

fn split_sections(text: &str, origin: &str) -> Result<HashMap<String, Section>> {
    let mut sections: HashMap<String, Section> = HashMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return Err(Error::parse(origin, lineno, format!("duplicate section [{name}]")));
            }
            sections.insert(
                name.clone(),
                Section {
                    line: lineno,
                    ..Default::default()
                },
            );
            current = Some(name);
            continue;
        }
        let name = current
            .as_ref()
            .ok_or_else(|| Error::parse(origin, lineno, "content before first section"))?;
        let sec = sections.get_mut(name).expect("section exists");
        if let Some((k, v)) = line.split_once('=') {
            sec.scalars.insert(k.trim().to_string(), (lineno, v.trim().to_string()));
        } else {
            let cells: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if sec.header.is_none() {
                sec.header = Some(cells);
            } else {
                sec.rows.push((lineno, cells));
            }
        }
    }
    Ok(sections)
}

/// Parses case-file text. `origin` labels parse errors.
pub fn parse_case(text: &str, origin: &str) -> Result<(Network, LoadProfile)> {
    let sections = split_sections(text, origin)?;
    let get = |name: &str| {
        sections
            .get(name)
            .ok_or_else(|| Error::parse(origin, 0, format!("missing section [{name}]")))
    };

    let system = get("system")?;
    let sys = SystemParams {
        base_mva: system.scalar(origin, "base_mva")?,
        v_min: system.scalar(origin, "v_min")?,
        v_max: system.scalar(origin, "v_max")?,
        v0: system.scalar(origin, "v0")?,
        v_sub: system.scalar(origin, "v_sub")?,
    };
    if !(sys.base_mva > 0.0) {
        return Err(Error::Validation("base_mva must be > 0".into()));
    }
    let base = sys.base_mva;

    let bus_sec = get("buses")?;
    let cols = bus_sec.columns(origin, &BUS_COLUMNS)?;
    let mut buses = Vec::new();
    for row in rows(origin, bus_sec, &cols) {
        let id = row.id("id")?;
        let income_class = row
            .raw("income_class")?
            .parse::<IncomeClass>()
            .map_err(|e| Error::parse(origin, row.line, e))?;
        let svc = match (row.opt_num("svc_qmin_mvar")?, row.opt_num("svc_qmax_mvar")?) {
            (None, None) => None,
            (Some(lo), Some(hi)) => Some(Svc {
                q_min: lo / base,
                q_max: hi / base,
            }),
            _ => {
                return Err(Error::parse(
                    origin,
                    row.line,
                    "svc_qmin_mvar and svc_qmax_mvar must both be given or both be `-`",
                ))
            }
        };
        buses.push(Bus {
            id,
            kind: if id == 1 { BusKind::Substation } else { BusKind::Load },
            income_class,
            peak_p: row.num("peak_p_mw")? / base,
            peak_q: row.num("peak_q_mvar")? / base,
            svc,
            dg_candidate: row.flag("dg_candidate")?,
        });
    }

    let line_sec = get("lines")?;
    let cols = line_sec.columns(origin, &LINE_COLUMNS)?;
    let mut lines = Vec::new();
    for row in rows(origin, line_sec, &cols) {
        let kind = match row.raw("kind")?.to_ascii_lowercase().as_str() {
            "sectionalizing" | "sect" => LineKind::Sectionalizing,
            "tie" => LineKind::Tie,
            other => return Err(Error::parse(origin, row.line, format!("unknown line kind `{other}`"))),
        };
        lines.push(Line {
            id: row.id("id")?,
            from_bus: row.id("from")?,
            to_bus: row.id("to")?,
            r: row.num("r_pu")?,
            x: row.num("x_pu")?,
            s_max: row.num("s_max_mva")? / base,
            kind,
            fault_weight: row.num("fault_weight")?,
        });
    }

    let prof_sec = get("profile")?;
    let dt = prof_sec.scalar(origin, "dt_hours")?;
    let cols = prof_sec.columns(origin, &PROFILE_COLUMNS)?;
    let mut entries = Vec::new();
    for row in rows(origin, prof_sec, &cols) {
        entries.push((row.id("t")?, row.num("mp")?, row.num("mq")?, row.line));
    }
    entries.sort_by_key(|e| e.0);
    for (pos, e) in entries.iter().enumerate() {
        if e.0 != pos + 1 {
            return Err(Error::parse(origin, e.3, "profile intervals must be numbered 1..T"));
        }
    }
    let profile = LoadProfile::new(
        dt,
        entries.iter().map(|e| e.1).collect(),
        entries.iter().map(|e| e.2).collect(),
    )?;

    let net = Network::new(buses, lines, sys)?;
    Ok((net, profile))
}

/// Serializes a network and profile in the case-file format.
pub fn write_case(net: &Network, profile: &LoadProfile) -> String {
    let base = net.base_mva;
    let mut out = String::new();
    let _ = writeln!(out, "[system]");
    let _ = writeln!(out, "base_mva = {}", net.base_mva);
    let _ = writeln!(out, "v_min = {}", net.v_min);
    let _ = writeln!(out, "v_max = {}", net.v_max);
    let _ = writeln!(out, "v0 = {}", net.v0);
    let _ = writeln!(out, "v_sub = {}", net.v_sub);
    let _ = writeln!(out, "\n[buses]\n{}", BUS_COLUMNS.join(" "));
    for b in net.buses() {
        let (lo, hi) = match b.svc {
            Some(s) => ((s.q_min * base).to_string(), (s.q_max * base).to_string()),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            b.id,
            b.income_class.as_str(),
            b.peak_p * base,
            b.peak_q * base,
            lo,
            hi,
            if b.dg_candidate { "yes" } else { "no" }
        );
    }
    let _ = writeln!(out, "\n[lines]\n{}", LINE_COLUMNS.join(" "));
    for l in net.lines() {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            l.id,
            l.from_bus,
            l.to_bus,
            l.r,
            l.x,
            l.s_max * base,
            if l.is_tie() { "tie" } else { "sectionalizing" },
            l.fault_weight
        );
    }
    let _ = writeln!(
        out,
        "\n[profile]\ndt_hours = {}\n{}",
        profile.dt,
        PROFILE_COLUMNS.join(" ")
    );
    for (t, (p, q)) in profile.mp.iter().zip(&profile.mq).enumerate() {
        let _ = writeln!(out, "{} {} {}", t + 1, p, q);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "
[system]
base_mva = 10
v_min = 0.95
v_max = 1.05
v0 = 1.0
v_sub = 1.0

[buses]
id income_class peak_p_mw peak_q_mvar svc_qmin_mvar svc_qmax_mvar dg_candidate
1 high 0 0 - - no
2 low 1.0 0.5 -0.5 0.5 yes
3 medium 2.0 1.0 - - yes

[lines]
id from to r_pu x_pu s_max_mva kind fault_weight
1 1 2 0.01 0.02 5 sectionalizing 1
2 3 2 0.01 0.02 5 sectionalizing 1   # reversed on purpose
3 1 3 0.01 0.02 5 tie 0

[profile]
dt_hours = 1
t mp mq
1 0.5 0.5
2 1.0 1.0
";

    #[test]
    fn parses_and_converts_to_per_unit() {
        let (net, profile) = parse_case(TINY, "tiny").unwrap();
        assert_eq!(net.n_buses(), 3);
        assert_eq!(net.bus(2).peak_p, 0.1);
        assert_eq!(net.bus(2).svc.unwrap().q_max, 0.05);
        assert_eq!(net.lines()[0].s_max, 0.5);
        assert_eq!((net.lines()[1].from_bus, net.lines()[1].to_bus), (2, 3));
        assert_eq!(profile.horizon(), 2);
    }

    #[test]
    fn write_then_parse_is_stable() {
        let (net, profile) = parse_case(TINY, "tiny").unwrap();
        let text = write_case(&net, &profile);
        let (net2, profile2) = parse_case(&text, "rewritten").unwrap();
        assert_eq!(text, write_case(&net2, &profile2));
        assert_eq!(profile, profile2);
    }

    #[test]
    fn duplicate_bus_is_validation_error() {
        let text = TINY.replace("3 medium 2.0", "2 medium 2.0");
        let err = parse_case(&text, "dup").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(err.to_string().contains("duplicate bus id 2"), "{err}");
    }

    #[test]
    fn malformed_number_reports_line() {
        let text = TINY.replace("0.01 0.02 5 tie", "0.01 abc 5 tie");
        match parse_case(&text, "bad").unwrap_err() {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 19);
                assert!(msg.contains("x_pu"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_section_is_parse_error() {
        let text = TINY.split("[profile]").next().unwrap();
        assert!(matches!(parse_case(text, "x"), Err(Error::Parse { .. })));
    }
}
