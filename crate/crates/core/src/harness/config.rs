//! Experiment configuration documents.
//!
//! A configuration is a single TOML document. Top-level keys:
//!
//! | key         | meaning                                                         |
//! |-------------|-----------------------------------------------------------------|
//! | `version`   | schema version, must be `1`                                     |
//! | `name`      | scenario id written into every result record                    |
//! | `trials`    | number of independent trials                                    |
//! | `methods`   | estimators to run: `baseline`, `music_joint`, `esprit_conventional`, `esprit_conjugated` |
//! | `oracle`    | optional `{ sigma_deg, reflections }`: bypass estimation with noisy true angles |
//! | `tx_region` | optional `{ min = [x, y], max = [x, y] }`: draw the transmitter uniformly per trial |
//! | `scenario`  | scene: `tx`, `aps = [{ position, boresight_deg }]`, `reflectors = [{ position, gain?, phase? }]`, `plan`, `geometry`, `chirp`, `snr_db`, `seed`, `reflection_loss`, `offsets`, ... |
//! | `sync`      | `trim_hz`, `smoothing_hz`, `min_overlap_hz`                     |
//! | `estimator` | `order = { rule = "threshold", eta }` or `{ rule = "mdl" }`, `music` grid |
//! | `fusion`    | `sigma_deg`, `cell`, `padding`, `grid?`, `locate = { mode = "argmax" }` or `{ mode = "centroid", fraction }` |
//! | `output`    | `dir`, `results` file name                                      |
//! | `service`   | `listen`, `window_s`, `method`, `results` file name            |
//!
//! Every section except `version` may be omitted and falls back to defaults.

use std::path::{Path as FsPath, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pipeline::PipelineSetup;
use crate::estimators::{EstimatorConfig, Method};
use crate::fusion::{FusionConfig, GridSpec};
use crate::simenv::{substream, Scenario};
use crate::sync::SyncConfig;
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

const TAG_TRIAL: u64 = 10;
const TAG_TX: u64 = 11;

/// Estimator bypass: true angles plus Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleAngles {
    pub sigma_deg: f64,
    /// Also report every reflection's angle, not only the direct path's.
    pub reflections: bool,
}

impl Default for OracleAngles {
    fn default() -> Self {
        Self {
            sigma_deg: 3.0,
            reflections: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub results: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            results: "results.jsonl".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub listen: String,
    /// Per-AP collection window, seconds.
    pub window_s: f64,
    pub method: Method,
    pub results: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:7878".into(),
            window_s: 2.0,
            method: Method::EspritConjugated,
            results: "service.jsonl".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub name: String,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub oracle: Option<OracleAngles>,
    pub tx_region: Option<Region>,
    pub scenario: Scenario,
    pub sync: SyncConfig,
    pub estimator: EstimatorConfig,
    pub fusion: FusionConfig,
    pub output: OutputConfig,
    pub service: ServiceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            name: "default".into(),
            trials: 10,
            methods: Method::ALL.to_vec(),
            oracle: None,
            tx_region: None,
            scenario: Scenario::default(),
            sync: SyncConfig::default(),
            estimator: EstimatorConfig::default(),
            fusion: FusionConfig::default(),
            output: OutputConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        match value.get("version").and_then(toml::Value::as_integer) {
            Some(v) if v == i64::from(CONFIG_VERSION) => {}
            Some(v) => return Err(Error::Config(format!("unsupported config version {v}"))),
            None => return Err(Error::Config("missing `version` key".into())),
        }
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {}", self.version)));
        }
        self.scenario.validate()?;
        self.fusion.validate()?;
        if self.methods.is_empty() && self.oracle.is_none() {
            return Err(Error::Config("no methods and no oracle configured".into()));
        }
        if let Some(o) = self.oracle {
            if !(o.sigma_deg >= 0.0) {
                return Err(Error::Config(format!("oracle sigma {} must be >= 0", o.sigma_deg)));
            }
        }
        if let Some(r) = self.tx_region {
            if !(r.min[0] <= r.max[0] && r.min[1] <= r.max[1]) {
                return Err(Error::Config("tx_region min exceeds max".into()));
            }
        }
        if !(self.service.window_s > 0.0) {
            return Err(Error::Config("service window must be positive".into()));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineSetup {
        PipelineSetup {
            chirp: self.scenario.chirp,
            plan: self.scenario.plan,
            geometry: self.scenario.geometry,
            sync: self.sync,
            estimator: self.estimator,
        }
    }

    /// Fusion grid: the configured one, or the padded bounding box of the
    /// monitored area, i.e. the APs and the transmitter region. Neither the
    /// transmitter nor the reflectors are used: the former would leak ground
    /// truth, the latter are where every AP's reflection bearings meet.
    pub fn grid(&self) -> Result<GridSpec> {
        let mut points: Vec<[f64; 2]> = self.scenario.aps.iter().map(|a| a.position).collect();
        if let Some(r) = self.tx_region {
            points.push(r.min);
            points.push(r.max);
        }
        self.fusion.grid_for(&points)
    }

    /// Seed of trial `trial`; trial 0 of a one-trial run keeps the seed.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        if self.trials == 1 && trial == 0 {
            return self.scenario.seed;
        }
        substream(self.scenario.seed, &[TAG_TRIAL, trial as u64]).random()
    }

    /// Scenario of one trial: its own seed and, with a `tx_region`, its own
    /// transmitter position.
    pub fn trial_scenario(&self, trial: usize) -> Scenario {
        let mut sc = self.scenario.clone();
        sc.seed = self.trial_seed(trial);
        if let Some(r) = self.tx_region {
            let mut rng = substream(self.scenario.seed, &[TAG_TX, trial as u64]);
            sc.tx = [
                r.min[0] + (r.max[0] - r.min[0]) * rng.random::<f64>(),
                r.min[1] + (r.max[1] - r.min[1]) * rng.random::<f64>(),
            ];
        }
        sc
    }

    pub fn results_path(&self) -> PathBuf {
        self.output.dir.join(&self.output.results)
    }

    pub fn service_results_path(&self) -> PathBuf {
        self.output.dir.join(&self.service.results)
    }
}
