//! Distribution network data model.
//!
//! Electrical quantities are stored in per-unit on the system base
//! (`Network::base_mva`). Case files carry MW / MVar / MVA and are converted
//! when loaded.

mod case;
mod graph;

pub use case::{load_case, parse_case, write_case};
pub(crate) use graph::UnionFind;
pub use graph::{check_radial, structural_islands, IslandPartition, RadialCheck};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type BusId = usize;
pub type LineId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncomeClass {
    Low,
    Medium,
    High,
}

impl IncomeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            IncomeClass::Low => "low",
            IncomeClass::Medium => "medium",
            IncomeClass::High => "high",
        }
    }
}

impl std::str::FromStr for IncomeClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(IncomeClass::Low),
            "medium" | "middle" => Ok(IncomeClass::Medium),
            "high" => Ok(IncomeClass::High),
            other => Err(format!("unknown income class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    Substation,
    Load,
}

/// Static var compensator limits, per-unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Svc {
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    pub income_class: IncomeClass,
    /// Real demand at profile peak, per-unit.
    pub peak_p: f64,
    /// Reactive demand at profile peak, per-unit.
    pub peak_q: f64,
    pub svc: Option<Svc>,
    pub dg_candidate: bool,
}

impl Bus {
    pub fn is_low_income(&self) -> bool {
        self.income_class == IncomeClass::Low
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Sectionalizing,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: LineId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub r: f64,
    pub x: f64,
    /// Thermal limit, per-unit.
    pub s_max: f64,
    pub kind: LineKind,
    pub fault_weight: f64,
}

impl Line {
    pub fn is_tie(&self) -> bool {
        self.kind == LineKind::Tie
    }

    pub fn connects(&self, a: BusId, b: BusId) -> bool {
        (self.from_bus == a && self.to_bus == b) || (self.from_bus == b && self.to_bus == a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    pub v_min: f64,
    pub v_max: f64,
    pub v0: f64,
    pub v_sub: f64,
    pub base_mva: f64,
}

/// Voltage bounds and base quantities of a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub v_min: f64,
    pub v_max: f64,
    pub v0: f64,
    pub v_sub: f64,
    pub base_mva: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            v_min: 0.95,
            v_max: 1.05,
            v0: 1.0,
            v_sub: 1.0,
            base_mva: 10.0,
        }
    }
}

impl Network {
    /// Builds and validates a network. Buses and lines are sorted by id;
    /// sectionalizing lines are re-oriented to point away from bus 1 along the
    /// base spanning tree.
    pub fn new(mut buses: Vec<Bus>, mut lines: Vec<Line>, sys: SystemParams) -> Result<Self> {
        buses.sort_by_key(|b| b.id);
        lines.sort_by_key(|l| l.id);
        for (pos, bus) in buses.iter().enumerate() {
            if bus.id != pos + 1 {
                if pos > 0 && buses[pos - 1].id == bus.id {
                    return Err(Error::Validation(format!("duplicate bus id {}", bus.id)));
                }
                return Err(Error::Validation(format!(
                    "bus ids must be contiguous 1..N (found {} at position {})",
                    bus.id,
                    pos + 1
                )));
            }
        }
        for (pos, line) in lines.iter().enumerate() {
            if line.id != pos + 1 {
                if pos > 0 && lines[pos - 1].id == line.id {
                    return Err(Error::Validation(format!("duplicate line id {}", line.id)));
                }
                return Err(Error::Validation(format!(
                    "line ids must be contiguous 1..L (found {} at position {})",
                    line.id,
                    pos + 1
                )));
            }
        }
        let n = buses.len();
        if n == 0 {
            return Err(Error::Validation("network has no buses".into()));
        }
        let substations: Vec<_> = buses
            .iter()
            .filter(|b| b.kind == BusKind::Substation)
            .map(|b| b.id)
            .collect();
        if substations != [1] {
            return Err(Error::Validation(format!(
                "exactly one substation at bus 1 required (found {substations:?})"
            )));
        }
        for bus in &buses {
            if !(bus.peak_p >= 0.0 && bus.peak_p.is_finite()) {
                return Err(Error::Validation(format!("bus {}: peak_p must be >= 0", bus.id)));
            }
            if !bus.peak_q.is_finite() {
                return Err(Error::Validation(format!("bus {}: peak_q not finite", bus.id)));
            }
            // tan(acos(0.5)) = sqrt(3)
            if bus.peak_q.abs() > bus.peak_p * 3f64.sqrt() + 1e-12 {
                log::debug!(
                    "bus {}: |peak_q| exceeds peak_p * tan(acos 0.5); check the load data",
                    bus.id
                );
            }
            if let Some(svc) = bus.svc {
                if svc.q_min > svc.q_max {
                    return Err(Error::Validation(format!("bus {}: svc q_min > q_max", bus.id)));
                }
            }
        }
        for line in &lines {
            for b in [line.from_bus, line.to_bus] {
                if b == 0 || b > n {
                    return Err(Error::Validation(format!(
                        "line {}: endpoint {b} is not a bus",
                        line.id
                    )));
                }
            }
            if line.from_bus == line.to_bus {
                return Err(Error::Validation(format!("line {}: self loop", line.id)));
            }
            if !(line.r >= 0.0 && line.x >= 0.0) {
                return Err(Error::Validation(format!("line {}: r and x must be >= 0", line.id)));
            }
            if !(line.s_max > 0.0 && line.s_max.is_finite()) {
                return Err(Error::Validation(format!("line {}: s_max must be > 0", line.id)));
            }
            if !(line.fault_weight >= 0.0 && line.fault_weight.is_finite()) {
                return Err(Error::Validation(format!(
                    "line {}: fault_weight must be >= 0",
                    line.id
                )));
            }
            if line.is_tie() && line.fault_weight != 0.0 {
                return Err(Error::Validation(format!(
                    "line {}: tie lines must have fault_weight 0",
                    line.id
                )));
            }
        }
        if !(sys.base_mva > 0.0) {
            return Err(Error::Validation("base_mva must be > 0".into()));
        }
        if !(sys.v_min < sys.v0 && sys.v0 <= sys.v_max) {
            return Err(Error::Validation("require v_min < v0 <= v_max".into()));
        }
        if !(sys.v_min <= sys.v_sub && sys.v_sub <= sys.v_max) {
            return Err(Error::Validation("require v_min <= v_sub <= v_max".into()));
        }

        orient_base_tree(n, &mut lines)?;

        Ok(Network {
            buses,
            lines,
            v_min: sys.v_min,
            v_max: sys.v_max,
            v0: sys.v0,
            v_sub: sys.v_sub,
            base_mva: sys.base_mva,
        })
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn bus(&self, id: BusId) -> &Bus {
        &self.buses[id - 1]
    }

    pub fn line(&self, id: LineId) -> Result<&Line> {
        id.checked_sub(1)
            .and_then(|i| self.lines.get(i))
            .ok_or(Error::UnknownLine(id))
    }

    /// Line joining `a` and `b`, in either direction.
    pub fn find_line(&self, a: BusId, b: BusId) -> Option<&Line> {
        self.lines.iter().find(|l| l.connects(a, b))
    }

    pub fn system(&self) -> SystemParams {
        SystemParams {
            v_min: self.v_min,
            v_max: self.v_max,
            v0: self.v0,
            v_sub: self.v_sub,
            base_mva: self.base_mva,
        }
    }

    pub fn sectionalizing(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| !l.is_tie())
    }

    pub fn ties(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| l.is_tie())
    }

    pub fn svc_buses(&self) -> Vec<BusId> {
        self.buses.iter().filter(|b| b.svc.is_some()).map(|b| b.id).collect()
    }

    pub fn dg_candidates(&self) -> Vec<BusId> {
        self.buses.iter().filter(|b| b.dg_candidate).map(|b| b.id).collect()
    }

    /// Whether the line touches a low-income community.
    pub fn serves_low_income(&self, line: &Line) -> bool {
        self.bus(line.from_bus).is_low_income() || self.bus(line.to_bus).is_low_income()
    }
}

/// Checks that the sectionalizing lines form a spanning tree rooted at bus 1 and
/// flips each so that `from_bus` is the parent.
fn orient_base_tree(n: usize, lines: &mut [Line]) -> Result<()> {
    let sect: Vec<usize> = (0..lines.len()).filter(|&i| !lines[i].is_tie()).collect();
    if sect.len() + 1 != n {
        return Err(Error::Validation(format!(
            "base topology is not a spanning tree: {} sectionalizing lines for {} buses",
            sect.len(),
            n
        )));
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for &i in &sect {
        adj[lines[i].from_bus].push(i);
        adj[lines[i].to_bus].push(i);
    }
    let mut seen = vec![false; n + 1];
    seen[1] = true;
    let mut queue = VecDeque::from([1usize]);
    let mut visited = 1;
    while let Some(u) = queue.pop_front() {
        for &li in &adj[u] {
            let line = &mut lines[li];
            let other = if line.from_bus == u { line.to_bus } else { line.from_bus };
            if seen[other] {
                continue;
            }
            if line.from_bus != u {
                std::mem::swap(&mut line.from_bus, &mut line.to_bus);
            }
            seen[other] = true;
            visited += 1;
            queue.push_back(other);
        }
    }
    if visited != n {
        return Err(Error::Validation(
            "base topology is not a spanning tree: sectionalizing lines do not connect all buses".into(),
        ));
    }
    Ok(())
}

const IEEE33: &str = include_str!("../../data/ieee33.case");

/// Bundled IEEE 33-bus feeder with its five tie lines and a 24-hour profile.
pub fn ieee33() -> (Network, LoadProfile) {
    parse_case(IEEE33, "ieee33.case").expect("bundled case is valid")
}

/// Normalized load profile shared by all buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub dt: f64,
    pub mp: Vec<f64>,
    pub mq: Vec<f64>,
}

impl LoadProfile {
    /// A full-day profile: multipliers in [0, 1] with peak exactly 1.
    pub fn new(dt: f64, mp: Vec<f64>, mq: Vec<f64>) -> Result<Self> {
        let p = LoadProfile { dt, mp, mq };
        p.validate()?;
        for series in [&p.mp, &p.mq] {
            let peak = series.iter().cloned().fold(f64::MIN, f64::max);
            if (peak - 1.0).abs() > 1e-12 {
                return Err(Error::Validation("profile maximum multiplier must be 1".into()));
            }
        }
        Ok(p)
    }

    /// Constant unit profile.
    pub fn flat(horizon: usize, dt: f64) -> Self {
        LoadProfile {
            dt,
            mp: vec![1.0; horizon],
            mq: vec![1.0; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.mp.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mp.is_empty() {
            return Err(Error::Validation("profile horizon must be >= 1".into()));
        }
        if self.mp.len() != self.mq.len() {
            return Err(Error::Validation("profile mp/mq length mismatch".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Validation("profile dt must be > 0".into()));
        }
        for series in [&self.mp, &self.mq] {
            if series.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
                return Err(Error::Validation("profile multipliers must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// The first `horizon` intervals. The window need not contain the peak.
    pub fn window(&self, horizon: usize) -> Result<LoadProfile> {
        if horizon == 0 || horizon > self.horizon() {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} outside 1..={}",
                self.horizon()
            )));
        }
        Ok(LoadProfile {
            dt: self.dt,
            mp: self.mp[..horizon].to_vec(),
            mq: self.mq[..horizon].to_vec(),
        })
    }
}
