//! Experiment configuration: JSON on disk, validated on load, hashed from
//! its canonical serialization.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::electron::{ElectronBasis, PotentialSpec};
use crate::error::{LabError, Result};
use crate::fock::FockBasis;
use crate::hamiltonians::{SplitBackend, System};
use crate::modes::ModeSet;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Pf,
    Np,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Dense,
    Quadrature,
}

impl Backend {
    pub fn split(self) -> SplitBackend {
        match self {
            Backend::Dense => SplitBackend::DenseEig,
            Backend::Quadrature => SplitBackend::quadrature(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    /// Infra-red cutoff (photon mass).
    pub m: f64,
    /// Ultra-violet cutoff.
    pub uv: f64,
    /// Lattice spacing of the momentum cells.
    pub eps: f64,
    /// Keep only this many lowest-energy modes (completed to ±k pairs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub count: usize,
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            count: 2,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderParameter {
    M,
    Eps,
    NMax,
    N,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub parameter: LadderParameter,
    pub values: Vec<f64>,
}

/// Experiment-specific knobs; every field is optional and has a default in
/// the experiment that reads it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParams {
    /// Total momenta along the first axis for the fiber experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    /// Refinement ladders for the convergence sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladders: Option<Vec<Ladder>>,
    /// Final Cauchy difference accepted by the convergence sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy_tol: Option<f64>,
    /// Number of random probes for inequality and symmetry checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    /// Charges at which the diamagnetic inequality is probed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_charges: Option<Vec<f64>>,
    /// Coulomb strengths for the supercritical probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    /// Initial bracket for the transition bisection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    /// Grid ladder for the supercritical probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ladder: Option<Vec<usize>>,
    /// Radial window `[r1, r2]` of the decay fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Infra-red cutoffs of the soft-photon ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_ladder: Option<Vec<f64>>,
    /// When set, each soft-photon rung uses `eps = eps_ratio * m`, so every
    /// rung samples the same cell directions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: Model,
    /// Spatial dimension of the electron grid (1 or 3).
    pub d: usize,
    /// Box length `L`.
    pub box_len: f64,
    /// Grid points per axis.
    pub n: usize,
    pub modes: ModesConfig,
    pub n_max: usize,
    /// Electron charge `e`.
    pub charge: f64,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub experiment: ExperimentParams,
}

const REQUIRED: [&str; 9] = [
    "schema_version",
    "model",
    "d",
    "box_len",
    "n",
    "modes",
    "n_max",
    "charge",
    "potential",
];

impl ExperimentConfig {
    /// Small d=1 instance whose full space stays below the dense threshold.
    pub fn desk() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: Model::Pf,
            d: 1,
            box_len: 20.0,
            n: 32,
            modes: ModesConfig {
                m: 0.2,
                uv: 1.0,
                eps: 0.4,
                count: Some(4),
            },
            n_max: 2,
            charge: 0.3,
            potential: PotentialSpec::SoftCoulomb { gamma: 0.5, s: 1.0 },
            solver: SolverConfig::default(),
            backend: Backend::Dense,
            seed: 0x5eed,
            experiment: ExperimentParams::default(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(s)?;
        let mut problems = Vec::new();
        match value.as_object() {
            Some(obj) => {
                for key in REQUIRED {
                    if !obj.contains_key(key) {
                        problems.push(format!("{key}: missing"));
                    }
                }
            }
            None => problems.push("<root>: not an object".into()),
        }
        if !problems.is_empty() {
            return Err(LabError::MalformedConfig(problems));
        }
        let cfg: Self = serde_json::from_value(value)
            .map_err(|e| LabError::MalformedConfig(vec![e.to_string()]))?;
        let problems = cfg.problems();
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(LabError::MalformedConfig(problems))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Every violated constraint, one entry per field.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                p.push(msg.to_string());
            }
        };
        need(
            self.schema_version == SCHEMA_VERSION,
            "schema_version: unsupported",
        );
        need(self.d == 1 || self.d == 3, "d: must be 1 or 3");
        need(self.box_len > 0.0, "box_len: must be positive");
        need(self.n >= 2 && self.n % 2 == 0, "n: must be even and >= 2");
        need(self.modes.m >= 0.0, "modes.m: must be non-negative");
        need(
            self.modes.uv > self.modes.m,
            "modes.uv: must exceed modes.m",
        );
        need(self.modes.eps > 0.0, "modes.eps: must be positive");
        need(self.modes.count != Some(0), "modes.count: must be positive");
        need(self.charge.is_finite(), "charge: must be finite");
        need(self.solver.count >= 1, "solver.count: must be >= 1");
        need(self.solver.tol > 0.0, "solver.tol: must be positive");
        let e = &self.experiment;
        if let Some(ls) = &e.ladders {
            for l in ls {
                need(
                    strictly_monotone(&l.values),
                    "experiment.ladders: values must be strictly monotone",
                );
            }
        }
        if let Some(ms) = &e.m_ladder {
            need(
                strictly_monotone(ms) && ms.iter().all(|m| *m > 0.0),
                "experiment.m_ladder: must be positive and strictly monotone",
            );
        }
        if let Some(r) = e.eps_ratio {
            need(r > 0.0, "experiment.eps_ratio: must be positive");
        }
        if let Some(ns) = &e.n_ladder {
            let v: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
            need(
                strictly_monotone(&v),
                "experiment.n_ladder: must be strictly monotone",
            );
        }
        if let Some([a, b]) = e.window {
            need(0.0 <= a && a < b, "experiment.window: need 0 <= r1 < r2");
        }
        if let Some([a, b]) = e.bracket {
            need(0.0 <= a && a < b, "experiment.bracket: need 0 <= lo < hi");
        }
        p
    }

    /// SHA-256 of the canonical (key-sorted, compact) JSON form.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn electron_basis(&self) -> Result<ElectronBasis> {
        ElectronBasis::new(self.d, self.box_len, self.n)
    }

    pub fn mode_set(&self) -> Result<ModeSet> {
        let ms = ModeSet::build(self.modes.m, self.modes.uv, self.modes.eps, self.charge)?;
        match self.modes.count {
            Some(c) => ms.lowest(c),
            None => Ok(ms),
        }
    }

    pub fn system(&self) -> Result<System> {
        let ms = self.mode_set()?;
        let fb = FockBasis::new(ms.len(), self.n_max)?;
        System::new(self.electron_basis()?, fb, ms)
    }
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0])
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_json()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let mut cfg = ExperimentConfig::desk();
        cfg.experiment.window = Some([2.0, 6.0]);
        save_config(&cfg, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
    }

    #[test]
    fn hash_ignores_key_order() {
        let cfg = ExperimentConfig::desk();
        let mut v: serde_json::Map<String, Value> =
            serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
        let mut pairs: Vec<_> = std::mem::take(&mut v).into_iter().collect();
        pairs.reverse();
        let text = format!(
            "{{{}}}",
            pairs
                .iter()
                .map(|(k, v)| format!("{:?}:{}", k, v))
                .collect::<Vec<_>>()
                .join(",")
        );
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.hash(), cfg.hash());
        let mut other = cfg.clone();
        other.charge = 0.31;
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn malformed_fields_listed() {
        let mut cfg = ExperimentConfig::desk();
        cfg.d = 2;
        cfg.box_len = -1.0;
        cfg.experiment.m_ladder = Some(vec![0.1, 0.1]);
        let err = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap_err();
        match err {
            LabError::MalformedConfig(list) => {
                assert_eq!(list.len(), 3, "{list:?}");
                assert!(list[0].starts_with("d:"));
            }
            e => panic!("{e}"),
        }
        let err = ExperimentConfig::from_json(r#"{"model": "pf"}"#).unwrap_err();
        match err {
            LabError::MalformedConfig(list) => assert_eq!(list.len(), 8),
            e => panic!("{e}"),
        }
    }
}
