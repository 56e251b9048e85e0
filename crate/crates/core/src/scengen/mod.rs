//! Stochastic scenario generation: weighted multi-line fault sets combined
//! with Gaussian nodal-load multipliers.
//!
//! Load multipliers come from ChaCha8 (`rand_chacha`) seeded with the
//! scenario set's `seed`; each scenario reads from its own stream
//! (`set_stream(substream)`), so a scenario's draws depend only on
//! `(seed, substream)` and not on generation order.

mod file;

pub use file::{read_scenarios, write_scenarios, ScenarioFile, SCENARIO_FORMAT_VERSION};

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{BusId, LineId, LoadProfile, Network};

/// Nodal load multiplier distribution: Normal(1, std) truncated to `[lo, hi]`
/// by resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauModel {
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for TauModel {
    fn default() -> Self {
        TauModel {
            std: 0.04,
            lo: 0.8,
            hi: 1.2,
        }
    }
}

/// Cluster membership carried by a representative scenario after reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub cluster: usize,
    pub members: usize,
    pub aggregated_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: usize,
    pub faults: BTreeSet<LineId>,
    pub prob: f64,
    /// Seed and stream the multipliers were drawn from.
    pub tau_seed: u64,
    pub substream: u64,
    /// `tau[j][t]` for bus `j + 1`.
    #[serde(skip)]
    pub tau: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterInfo>,
}

impl Scenario {
    /// A scenario at nominal load (τ = 1 everywhere). Its multipliers are not
    /// reproducible from a seed, so it does not survive a file round trip.
    pub fn nominal(id: usize, faults: BTreeSet<LineId>, prob: f64, n_buses: usize, horizon: usize) -> Self {
        Scenario {
            id,
            faults,
            prob,
            tau_seed: 0,
            substream: id as u64,
            tau: vec![vec![1.0; horizon]; n_buses],
            cluster: None,
        }
    }

    pub fn horizon(&self) -> usize {
        self.tau.first().map_or(0, Vec::len)
    }

    /// Real demand of `bus` at interval `t`, per-unit.
    pub fn demand_p(&self, net: &Network, profile: &LoadProfile, bus: BusId, t: usize) -> f64 {
        self.tau[bus - 1][t] * profile.mp[t] * net.bus(bus).peak_p
    }

    /// Reactive demand of `bus` at interval `t`, per-unit.
    pub fn demand_q(&self, net: &Network, profile: &LoadProfile, bus: BusId, t: usize) -> f64 {
        self.tau[bus - 1][t] * profile.mq[t] * net.bus(bus).peak_q
    }

    /// System real demand per interval, per-unit.
    pub fn total_p(&self, net: &Network, profile: &LoadProfile) -> Vec<f64> {
        (0..self.horizon())
            .map(|t| (1..=net.n_buses()).map(|j| self.demand_p(net, profile, j, t)).sum())
            .collect()
    }

    pub fn total_q(&self, net: &Network, profile: &LoadProfile) -> Vec<f64> {
        (0..self.horizon())
            .map(|t| (1..=net.n_buses()).map(|j| self.demand_q(net, profile, j, t)).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub rng_seed: u64,
    pub tau_model: TauModel,
}

impl ScenarioSet {
    pub fn from_scenarios(scenarios: Vec<Scenario>) -> Self {
        ScenarioSet {
            scenarios,
            rng_seed: 0,
            tau_model: TauModel::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn total_prob(&self) -> f64 {
        self.scenarios.iter().map(|s| s.prob).sum()
    }

    pub fn horizon(&self) -> usize {
        self.scenarios.first().map_or(0, Scenario::horizon)
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.total_prob();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "scenario probabilities sum to {total}, expected 1"
            )));
        }
        let mut ids = BTreeSet::new();
        for s in &self.scenarios {
            if !ids.insert(s.id) {
                return Err(Error::Validation(format!("duplicate scenario id {}", s.id)));
            }
            if !(s.prob > 0.0) {
                return Err(Error::Validation(format!("scenario {}: prob must be > 0", s.id)));
            }
            if s.tau.iter().flatten().any(|&t| !(t > 0.0)) {
                return Err(Error::Validation(format!("scenario {}: tau must be > 0", s.id)));
            }
        }
        Ok(())
    }

    /// Stable hash over scenario ids, fault sets, seeds and probabilities.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(b"dgplan-scenarios\0");
        for s in &self.scenarios {
            h.update((s.id as u64).to_le_bytes());
            h.update((s.faults.len() as u64).to_le_bytes());
            for &l in &s.faults {
                h.update((l as u64).to_le_bytes());
            }
            h.update(s.tau_seed.to_le_bytes());
            h.update(s.substream.to_le_bytes());
            h.update(s.prob.to_bits().to_le_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }
}

/// Options for [`build_scenarios`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioOptions {
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub low_income_weight_ratio: f64,
    /// Keep all 2-line sets but only this many weight-sampled 3-line sets.
    pub cap_3line: Option<usize>,
    pub tau: TauModel,
    /// Allows single-line fault sets.
    pub diagnostic: bool,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            sizes: vec![2, 3],
            seed: 0,
            low_income_weight_ratio: 2.0,
            cap_3line: None,
            tau: TauModel::default(),
            diagnostic: false,
        }
    }
}

/// Sectionalizing lines with positive fault weight.
pub fn faultable_lines(net: &Network) -> Vec<LineId> {
    net.lines()
        .iter()
        .filter(|l| !l.is_tie() && l.fault_weight > 0.0)
        .map(|l| l.id)
        .collect()
}

/// All combinations of faultable lines of each requested size, smallest size
/// first, lexicographic within a size.
pub fn enumerate_fault_sets(net: &Network, sizes: &[usize]) -> Result<Vec<BTreeSet<LineId>>> {
    let lines = faultable_lines(net);
    if lines.is_empty() {
        return Err(Error::InvalidArgument("network has no faultable lines".into()));
    }
    let sizes: BTreeSet<usize> = sizes.iter().copied().collect();
    if sizes.is_empty() || sizes.iter().any(|&k| !(1..=3).contains(&k)) {
        return Err(Error::InvalidArgument(format!(
            "fault set sizes must be drawn from {{1, 2, 3}}, got {sizes:?}"
        )));
    }
    let largest = *sizes.iter().next_back().expect("non-empty");
    if lines.len() < largest {
        return Err(Error::InvalidArgument(format!(
            "{} faultable lines cannot form sets of size {largest}",
            lines.len()
        )));
    }
    Ok(sizes
        .iter()
        .flat_map(|&k| lines.iter().copied().combinations(k))
        .map(|c| c.into_iter().collect())
        .collect())
}

/// Effective fault weight: the case weight, scaled by `low_income_ratio` for
/// lines touching a low-income bus.
pub fn line_weight(net: &Network, line: LineId, low_income_ratio: f64) -> Result<f64> {
    let l = net.line(line)?;
    let scale = if net.serves_low_income(l) {
        low_income_ratio
    } else {
        1.0
    };
    Ok(l.fault_weight * scale)
}

/// Probability of each fault set, proportional to the product of its line
/// weights.
pub fn assign_probabilities(fault_sets: &[BTreeSet<LineId>], net: &Network, low_income_ratio: f64) -> Result<Vec<f64>> {
    if !(low_income_ratio > 0.0) {
        return Err(Error::InvalidArgument("low_income_weight_ratio must be > 0".into()));
    }
    let mut weights = Vec::with_capacity(fault_sets.len());
    for set in fault_sets {
        let mut w = 1.0;
        for &l in set {
            let lw = line_weight(net, l, low_income_ratio)?;
            if !(lw > 0.0) {
                return Err(Error::InvalidArgument(format!("line {l} has zero fault weight")));
            }
            w *= lw;
        }
        weights.push(w);
    }
    normalize(weights)
}

fn normalize(weights: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidArgument("total scenario weight is zero".into()));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `tau[j][t]` for every bus and interval from stream `substream`.
pub fn sample_load_multipliers(
    n_buses: usize,
    horizon: usize,
    model: &TauModel,
    seed: u64,
    substream: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(model.lo > 0.0 && model.lo <= 1.0 && model.hi >= 1.0) {
        return Err(Error::InvalidArgument(
            "tau truncation bounds must satisfy 0 < lo <= 1 <= hi".into(),
        ));
    }
    let normal = Normal::new(1.0, model.std).map_err(|e| Error::InvalidArgument(format!("tau std: {e}")))?;
    let mut rng = stream_rng(seed, substream);
    Ok((0..n_buses)
        .map(|_| {
            (0..horizon)
                .map(|_| loop {
                    let v: f64 = normal.sample(&mut rng);
                    if (model.lo..=model.hi).contains(&v) {
                        break v;
                    }
                })
                .collect()
        })
        .collect())
}

/// Weighted sampling without replacement (exponential-key method). Returns
/// indices in draw order.
fn weighted_sample(weights: &[f64], n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut keys: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random::<f64>();
            // ln(u)/w, larger is better; u in [0,1) so guard against ln(0)
            let key = if w > 0.0 {
                (u.max(f64::MIN_POSITIVE)).ln() / w
            } else {
                f64::NEG_INFINITY
            };
            (key, i)
        })
        .collect();
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keys.into_iter().take(n).map(|(_, i)| i).collect()
}

pub fn build_scenarios(net: &Network, profile: &LoadProfile, opts: &ScenarioOptions) -> Result<ScenarioSet> {
    if opts.sizes.contains(&1) && !opts.diagnostic {
        return Err(Error::InvalidArgument(
            "single-line fault sets are only generated in diagnostic mode".into(),
        ));
    }
    let sets = enumerate_fault_sets(net, &opts.sizes)?;
    let mut probs = assign_probabilities(&sets, net, opts.low_income_weight_ratio)?;
    let mut chosen: Vec<usize> = (0..sets.len()).collect();

    if let Some(cap) = opts.cap_3line {
        let three: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].len() == 3).collect();
        if cap < three.len() {
            let mass: f64 = three.iter().map(|&i| probs[i]).sum();
            let w: Vec<f64> = three.iter().map(|&i| probs[i]).collect();
            let mut rng = stream_rng(opts.seed, u64::MAX - 1);
            let mut picked: Vec<usize> = weighted_sample(&w, cap, &mut rng)
                .into_iter()
                .map(|k| three[k])
                .collect();
            picked.sort_unstable();
            // sampled proportionally to weight, so each keeps an equal share of
            // the 3-line mass
            for &i in &picked {
                probs[i] = mass / cap as f64;
            }
            let keep: BTreeSet<usize> = picked.into_iter().collect();
            chosen.retain(|&i| sets[i].len() != 3 || keep.contains(&i));
            let renorm = normalize(chosen.iter().map(|&i| probs[i]).collect())?;
            for (&i, p) in chosen.iter().zip(renorm) {
                probs[i] = p;
            }
        }
    }

    let scenarios = chosen
        .iter()
        .enumerate()
        .map(|(id, &i)| {
            let tau = sample_load_multipliers(net.n_buses(), profile.horizon(), &opts.tau, opts.seed, id as u64)?;
            Ok(Scenario {
                id,
                faults: sets[i].clone(),
                prob: probs[i],
                tau_seed: opts.seed,
                substream: id as u64,
                tau,
                cluster: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let set = ScenarioSet {
        scenarios,
        rng_seed: opts.seed,
        tau_model: opts.tau,
    };
    set.validate()?;
    Ok(set)
}

/// Draws `n` distinct scenarios with probability proportional to `prob`,
/// renormalizes their probabilities and redraws load multipliers from `seed`.
pub fn sample_test_scenarios(set: &ScenarioSet, n: usize, seed: u64, n_buses: usize) -> Result<ScenarioSet> {
    if n > set.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {n} scenarios from a set of {}",
            set.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "test set must contain at least one scenario".into(),
        ));
    }
    let horizon = set.horizon();
    let weights: Vec<f64> = set.scenarios.iter().map(|s| s.prob).collect();
    let mut rng = stream_rng(seed, u64::MAX);
    let picked = weighted_sample(&weights, n, &mut rng);
    let total: f64 = picked.iter().map(|&i| weights[i]).sum();
    let scenarios = picked
        .into_iter()
        .map(|i| {
            let src = &set.scenarios[i];
            Ok(Scenario {
                id: src.id,
                faults: src.faults.clone(),
                prob: src.prob / total,
                tau_seed: seed,
                substream: src.id as u64,
                tau: sample_load_multipliers(n_buses, horizon, &set.tau_model, seed, src.id as u64)?,
                cluster: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioSet {
        scenarios,
        rng_seed: seed,
        tau_model: set.tau_model,
    })
}
