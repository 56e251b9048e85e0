//! Planning parameters, the assembled planning problem, and the first-stage
//! plan with its file format.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{BusId, IncomeClass, LoadProfile, Network};
use crate::scengen::ScenarioSet;

/// Investment, cost and DG operating parameters. Powers in MW, money in $.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanningParams {
    pub n_dg_max: usize,
    pub budget: f64,
    /// Largest DG rating, MW.
    pub p_max: f64,
    /// $/kW of rated capacity.
    pub alpha_p: f64,
    /// Fixed $ per installed unit.
    pub alpha_e: f64,
    /// $/kWh of unserved energy.
    pub beta: f64,
    pub gamma: f64,
    pub low_income_gamma_factor: f64,
    pub dg_pf: f64,
    pub dg_p_min: f64,
    pub dg_q_min: f64,
    pub size_step: f64,
}

impl Default for PlanningParams {
    fn default() -> Self {
        PlanningParams {
            n_dg_max: 5,
            budget: 2.0e6,
            p_max: 2.5,
            alpha_p: 254.0,
            alpha_e: 3.18e4,
            beta: 50.0,
            gamma: 100.0,
            low_income_gamma_factor: 1.5,
            dg_pf: 0.9,
            dg_p_min: 0.0,
            dg_q_min: 0.0,
            size_step: 0.1,
        }
    }
}

impl PlanningParams {
    /// Number of size increments that make up `p_max`.
    pub fn n_steps(&self) -> Result<usize> {
        let r = self.p_max / self.size_step;
        if !(r.is_finite() && (r - r.round()).abs() <= 1e-9 * r.abs().max(1.0)) {
            return Err(Error::InvalidArgument(format!(
                "p_max {} is not an integer multiple of size_step {}",
                self.p_max, self.size_step
            )));
        }
        Ok(r.round() as usize)
    }

    /// Rating of `n` size increments, rounded to clean decimal form.
    pub fn rating(&self, n: usize) -> f64 {
        ((n as f64 * self.size_step) * 1e9).round() / 1e9
    }

    /// tan(acos ψ).
    pub fn q_ratio(&self) -> f64 {
        let pf = self.dg_pf;
        (1.0 - pf * pf).sqrt() / pf
    }

    pub fn unit_cost(&self, rated_mw: f64) -> f64 {
        self.alpha_p * 1000.0 * rated_mw + self.alpha_e
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.budget >= 0.0) {
            return bad("budget must be >= 0");
        }
        if !(self.p_max > 0.0) || !(self.size_step > 0.0) {
            return bad("p_max and size_step must be > 0");
        }
        self.n_steps()?;
        if !(self.dg_pf > 0.0 && self.dg_pf <= 1.0) {
            return bad("dg_pf must lie in (0, 1]");
        }
        for (name, v) in [
            ("alpha_p", self.alpha_p),
            ("alpha_e", self.alpha_e),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("low_income_gamma_factor", self.low_income_gamma_factor),
            ("dg_p_min", self.dg_p_min),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0")));
            }
        }
        if self.dg_p_min > self.p_max {
            return bad("dg_p_min exceeds p_max");
        }
        if !self.dg_q_min.is_finite() || self.dg_q_min > 0.0 {
            return bad("dg_q_min must be finite and <= 0");
        }
        Ok(())
    }
}

/// Equity criteria e*_i, one per bus; `f64::INFINITY` omits the bus's row.
pub fn uniform_equity(net: &Network, e: f64) -> Vec<f64> {
    vec![e; net.n_buses()]
}

/// Per-class criteria, with per-bus overrides winning.
pub fn equity_by_class(
    net: &Network,
    default: f64,
    by_class: &[(IncomeClass, f64)],
    by_bus: &[(BusId, f64)],
) -> Result<Vec<f64>> {
    let mut out = vec![default; net.n_buses()];
    for b in net.buses() {
        if let Some(&(_, e)) = by_class.iter().find(|(c, _)| *c == b.income_class) {
            out[b.id - 1] = e;
        }
    }
    for &(bus, e) in by_bus {
        if bus == 0 || bus > net.n_buses() {
            return Err(Error::InvalidArgument(format!("equity override for unknown bus {bus}")));
        }
        out[bus - 1] = e;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PlanningProblem {
    pub net: Network,
    pub profile: LoadProfile,
    pub scenarios: ScenarioSet,
    pub params: PlanningParams,
    /// e*_i by bus (index = bus − 1).
    pub equity: Vec<f64>,
}

impl PlanningProblem {
    /// A problem with no equity rows (all e* = ∞).
    pub fn new(net: Network, profile: LoadProfile, scenarios: ScenarioSet, params: PlanningParams) -> Self {
        let equity = vec![f64::INFINITY; net.n_buses()];
        PlanningProblem {
            net,
            profile,
            scenarios,
            params,
            equity,
        }
    }

    pub fn with_equity(mut self, equity: Vec<f64>) -> Self {
        self.equity = equity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.profile.validate()?;
        if self.scenarios.is_empty() {
            return Err(Error::InvalidArgument("planning needs at least one scenario".into()));
        }
        self.scenarios.validate()?;
        if self.equity.len() != self.net.n_buses() {
            return Err(Error::InvalidArgument(format!(
                "{} equity criteria for {} buses",
                self.equity.len(),
                self.net.n_buses()
            )));
        }
        if let Some((i, e)) = self.equity.iter().enumerate().find(|(_, e)| !(**e >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "equity criterion {e} at bus {} must be >= 0",
                i + 1
            )));
        }
        let h = self.profile.horizon();
        for s in &self.scenarios.scenarios {
            if s.horizon() != h || s.tau.len() != self.net.n_buses() {
                return Err(Error::Validation(format!(
                    "scenario {} load multipliers do not match the network/profile ({} buses, T = {h})",
                    s.id,
                    self.net.n_buses()
                )));
            }
            for &l in &s.faults {
                if self.net.line(l)?.is_tie() {
                    return Err(Error::Validation(format!("scenario {} faults tie line {l}", s.id)));
                }
            }
        }
        Ok(())
    }
}

/// First-stage decision: which buses get a DG and its rating (MW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Indexed by bus − 1.
    pub installed: Vec<bool>,
    pub rated_mw: Vec<f64>,
}

impl Plan {
    pub fn empty(n_buses: usize) -> Self {
        Plan {
            installed: vec![false; n_buses],
            rated_mw: vec![0.0; n_buses],
        }
    }

    pub fn with_unit(mut self, bus: BusId, rated_mw: f64) -> Self {
        self.installed[bus - 1] = true;
        self.rated_mw[bus - 1] = rated_mw;
        self
    }

    pub fn n_buses(&self) -> usize {
        self.installed.len()
    }

    /// Installed buses with ratings, ascending by bus.
    pub fn units(&self) -> Vec<(BusId, f64)> {
        (0..self.n_buses())
            .filter(|&i| self.installed[i])
            .map(|i| (i + 1, self.rated_mw[i]))
            .collect()
    }

    pub fn n_units(&self) -> usize {
        self.installed.iter().filter(|&&k| k).count()
    }

    pub fn total_mw(&self) -> f64 {
        self.rated_mw.iter().sum()
    }

    pub fn investment_cost(&self, params: &PlanningParams) -> f64 {
        self.units().iter().map(|&(_, p)| params.unit_cost(p)).sum()
    }

    pub fn validate(&self, net: &Network, params: &PlanningParams) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.installed.len() != net.n_buses() || self.rated_mw.len() != net.n_buses() {
            return fail(format!(
                "plan covers {} buses, network has {}",
                self.installed.len(),
                net.n_buses()
            ));
        }
        for i in 0..self.n_buses() {
            let (k, p) = (self.installed[i], self.rated_mw[i]);
            let bus = i + 1;
            if !(p >= 0.0) || p > params.p_max + 1e-9 {
                return fail(format!("bus {bus}: rating {p} MW outside [0, {}]", params.p_max));
            }
            if p > 0.0 && !k {
                return fail(format!("bus {bus}: rating {p} MW without an installed unit"));
            }
            let steps = p / params.size_step;
            if (steps - steps.round()).abs() > 1e-6 {
                return fail(format!(
                    "bus {bus}: rating {p} MW is not a multiple of {}",
                    params.size_step
                ));
            }
            if k && (bus == 1 || !net.bus(bus).dg_candidate) {
                return fail(format!("bus {bus} is not a DG candidate"));
            }
        }
        if self.n_units() > params.n_dg_max {
            return fail(format!(
                "{} units exceed the limit of {}",
                self.n_units(),
                params.n_dg_max
            ));
        }
        let cost = self.investment_cost(params);
        if cost > params.budget * (1.0 + 1e-9) {
            return fail(format!("investment ${cost} exceeds budget ${}", params.budget));
        }
        Ok(())
    }

    /// `bus,k,rated_mw` with one row per bus.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bus,k,rated_mw\n");
        for i in 0..self.n_buses() {
            let _ = writeln!(s, "{},{},{}", i + 1, u8::from(self.installed[i]), self.rated_mw[i]);
        }
        s
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Plan> {
        let mut rows = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (no == 0 && line.starts_with("bus")) {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let err = |m: &str| Error::parse(origin, no + 1, m);
            if f.len() != 3 {
                return Err(err("expected bus,k,rated_mw"));
            }
            let bus: usize = f[0].parse().map_err(|_| err("bad bus id"))?;
            let k = match f[1] {
                "0" => false,
                "1" => true,
                _ => return Err(err("k must be 0 or 1")),
            };
            let p: f64 = f[2].parse().map_err(|_| err("bad rating"))?;
            if bus != rows.len() + 1 {
                return Err(err("bus ids must run 1..N in order"));
            }
            rows.push((k, p));
        }
        Ok(Plan {
            installed: rows.iter().map(|r| r.0).collect(),
            rated_mw: rows.iter().map(|r| r.1).collect(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Plan> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Plan::from_csv(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::ieee33;

    #[test]
    fn table_one_defaults() {
        let p = PlanningParams::default();
        assert_eq!(p.n_steps().unwrap(), 25);
        // five units at full size blow the budget
        let all = 5.0 * p.unit_cost(2.5);
        assert!((all - 3_334_000.0).abs() < 1e-6);
        assert!(all > p.budget);
        assert_eq!(p.rating(3), 0.3);
    }

    #[test]
    fn non_integral_steps_rejected() {
        let p = PlanningParams {
            p_max: 2.55,
            ..Default::default()
        };
        assert!(p.n_steps().is_err());
    }

    #[test]
    fn plan_validation_and_csv() {
        let (net, _) = ieee33();
        let params = PlanningParams::default();
        let plan = Plan::empty(33).with_unit(18, 1.2).with_unit(25, 0.7);
        plan.validate(&net, &params).unwrap();
        let back = Plan::from_csv(&plan.to_csv(), "mem").unwrap();
        assert_eq!(back, plan);
        assert!(Plan::empty(33).with_unit(1, 0.5).validate(&net, &params).is_err());
        assert!(Plan::empty(33).with_unit(5, 0.55).validate(&net, &params).is_err());
        let mut over = Plan::empty(33);
        for b in 2..=5 {
            over = over.with_unit(b, 2.5);
        }
        assert!(over.validate(&net, &params).is_err());
    }

    #[test]
    fn equity_granularity() {
        let (net, _) = ieee33();
        let e = equity_by_class(&net, f64::INFINITY, &[(IncomeClass::Low, 0.02)], &[(18, 0.1)]).unwrap();
        assert_eq!(e[16], 0.02);
        assert_eq!(e[17], 0.1);
        assert!(e[2].is_infinite());
    }
}
