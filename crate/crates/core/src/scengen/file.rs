//! Scenario-set files: JSON with a versioned header. Load multipliers are
//! either stored inline or regenerated from each scenario's
//! `(tau_seed, substream)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sample_load_multipliers, Scenario, ScenarioSet, TauModel};
use crate::error::{Error, Result};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;
const FORMAT_TAG: &str = "dgplan-scenarios";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub format: String,
    pub version: u32,
    /// `scenarios`, `test` or `reduced`.
    pub kind: String,
    pub rng_seed: u64,
    pub tau_model: TauModel,
    pub horizon: usize,
    pub n_buses: usize,
    pub fingerprint: String,
    pub scenarios: Vec<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<Vec<Vec<f64>>>>,
}

impl ScenarioFile {
    pub fn from_set(set: &ScenarioSet, kind: &str, store_tau: bool) -> Self {
        ScenarioFile {
            format: FORMAT_TAG.into(),
            version: SCENARIO_FORMAT_VERSION,
            kind: kind.into(),
            rng_seed: set.rng_seed,
            tau_model: set.tau_model,
            horizon: set.horizon(),
            n_buses: set.scenarios.first().map_or(0, |s| s.tau.len()),
            fingerprint: set.fingerprint(),
            scenarios: set.scenarios.clone(),
            tau: store_tau.then(|| set.scenarios.iter().map(|s| s.tau.clone()).collect()),
        }
    }

    pub fn into_set(self) -> Result<ScenarioSet> {
        if self.format != FORMAT_TAG {
            return Err(Error::Validation(format!(
                "not a scenario file (format `{}`)",
                self.format
            )));
        }
        if self.version != SCENARIO_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported scenario file version {}",
                self.version
            )));
        }
        let mut scenarios = self.scenarios;
        match self.tau {
            Some(tau) => {
                if tau.len() != scenarios.len() {
                    return Err(Error::Validation("stored tau count mismatch".into()));
                }
                for (s, t) in scenarios.iter_mut().zip(tau) {
                    s.tau = t;
                }
            }
            None => {
                for s in scenarios.iter_mut() {
                    s.tau =
                        sample_load_multipliers(self.n_buses, self.horizon, &self.tau_model, s.tau_seed, s.substream)?;
                }
            }
        }
        let set = ScenarioSet {
            scenarios,
            rng_seed: self.rng_seed,
            tau_model: self.tau_model,
        };
        set.validate()?;
        if set.fingerprint() != self.fingerprint {
            return Err(Error::FingerprintMismatch(set.fingerprint(), self.fingerprint));
        }
        Ok(set)
    }
}

pub fn write_scenarios(path: impl AsRef<Path>, set: &ScenarioSet, kind: &str, store_tau: bool) -> Result<()> {
    let file = ScenarioFile::from_set(set, kind, store_tau);
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_scenarios(path: impl AsRef<Path>) -> Result<ScenarioSet> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let file: ScenarioFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    file.into_set()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::ieee33;
    use crate::scengen::{build_scenarios, ScenarioOptions};

    #[test]
    fn regenerated_and_stored_tau_agree() {
        let (net, profile) = ieee33();
        let opts = ScenarioOptions {
            seed: 3,
            cap_3line: Some(10),
            ..Default::default()
        };
        let set = build_scenarios(&net, &profile.window(3).unwrap(), &opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for store in [false, true] {
            let p = dir.path().join(format!("s{store}.json"));
            write_scenarios(&p, &set, "scenarios", store).unwrap();
            let back = read_scenarios(&p).unwrap();
            assert_eq!(back, set);
        }
    }

    #[test]
    fn missing_file_is_missing_artifact() {
        assert!(matches!(
            read_scenarios("/nonexistent/scen.json"),
            Err(Error::MissingArtifact(_))
        ));
    }
}
