//! Batch experiments: every trial runs the whole chain from synthesized
//! captures to a fused location.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assign::matched_error;
use super::config::ExperimentConfig;
use super::pipeline::{estimate_ap, quantize};
use crate::fusion::{angles_heatmap, fuse, locate, FusionConfig, GridSpec, Heatmap, Location};
use crate::simenv::{substream, ApPose, PathKind, Scenario, FIELD_OF_VIEW_DEG};
use crate::{Error, Result};

const TAG_ORACLE: u64 = 20;

/// Name under which oracle-angle trials are recorded.
pub const ORACLE: &str = "oracle";

/// Angle outcome of one AP in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApOutcome {
    pub ap: usize,
    pub angles: Option<Vec<f64>>,
    /// Error of the estimate paired with the direct path, degrees.
    pub aoa_error_deg: Option<f64>,
    pub error: Option<String>,
}

/// One method in one trial; a line of the results log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub trial: usize,
    pub seed: u64,
    pub method: String,
    pub tx: [f64; 2],
    pub estimate: Option<[f64; 2]>,
    pub error_m: Option<f64>,
    pub tie: bool,
    pub aps: Vec<ApOutcome>,
    pub failure: Option<String>,
}

/// Aggregate of one method over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: String,
    pub method: String,
    pub trials: usize,
    pub failed: usize,
    /// Localization errors of successful trials, meters, by trial.
    pub localization_errors: Vec<f64>,
    /// Per-AP direct-path angle errors, degrees.
    pub aoa_errors: Vec<f64>,
    /// Wall time of the whole run, seconds.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Ordered by trial, then method.
    pub records: Vec<TrialRecord>,
    pub results: Vec<ExperimentResult>,
}

impl RunOutput {
    pub fn result(&self, method: &str) -> Option<&ExperimentResult> {
        self.results.iter().find(|r| r.method == method)
    }

    /// Writes the records as JSON lines, the format of the results log.
    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, &super::LogEntry::Trial(r.clone()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Labels of every method a configuration runs, in record order.
pub fn method_labels(cfg: &ExperimentConfig) -> Vec<String> {
    let mut labels: Vec<String> = cfg.methods.iter().map(|m| m.name().to_string()).collect();
    if cfg.oracle.is_some() {
        labels.push(ORACLE.into());
    }
    labels
}

pub fn run_scenario(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let start = Instant::now();
    let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t, &grid))
        .collect();
    let elapsed_s = start.elapsed().as_secs_f64();
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let results = method_labels(cfg)
        .into_iter()
        .map(|label| {
            let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.method == label).collect();
            ExperimentResult {
                scenario: cfg.name.clone(),
                trials: mine.len(),
                failed: mine.iter().filter(|r| r.error_m.is_none()).count(),
                localization_errors: mine.iter().filter_map(|r| r.error_m).collect(),
                aoa_errors: mine
                    .iter()
                    .flat_map(|r| r.aps.iter().filter_map(|a| a.aoa_error_deg))
                    .collect(),
                method: label,
                elapsed_s,
            }
        })
        .collect();
    Ok(RunOutput { records, results })
}

struct ApTruth {
    angles: Vec<f64>,
    direct: Option<usize>,
}

/// Fuses the APs that produced angles and locates the transmitter.
/// APs are fused in index order so every caller multiplies identically.
pub fn fuse_angles(aps: &[ApPose], angles: &[Option<Vec<f64>>], fusion: &FusionConfig, grid: &GridSpec) -> Result<Location> {
    let maps: Vec<Heatmap> = aps
        .par_iter()
        .zip(angles)
        .filter_map(|(pose, a)| a.as_ref().map(|a| angles_heatmap(pose, a, fusion.sigma_deg, grid)))
        .collect::<Result<_>>()?;
    if maps.len() < 2 {
        return Err(Error::Parameter(format!(
            "{} AP(s) with angle estimates, fusion needs 2",
            maps.len()
        )));
    }
    locate(&fuse(&maps)?, fusion.locate)
}

/// All records of one trial, one per method label.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize, grid: &GridSpec) -> Vec<TrialRecord> {
    let sc = cfg.trial_scenario(trial);
    let setup = cfg.pipeline();
    let n_ap = sc.aps.len();

    let truths: Vec<Result<ApTruth>> = (0..n_ap).map(|ap| truth_of(&sc, ap)).collect();
    let mut per_method: Vec<Vec<std::result::Result<Vec<f64>, String>>> = vec![Vec::with_capacity(n_ap); cfg.methods.len()];
    for ap in 0..n_ap {
        let outcome = sc.synthesize_captures(ap).map(|mut caps| {
            quantize(&mut caps);
            estimate_ap(&caps, &setup, &cfg.methods)
        });
        match outcome {
            Ok(list) => {
                for (slot, (_, r)) in per_method.iter_mut().zip(list) {
                    slot.push(r.map(|e| e.angles).map_err(|e| e.to_string()));
                }
            }
            Err(e) => {
                let msg = e.to_string();
                per_method.iter_mut().for_each(|slot| slot.push(Err(msg.clone())));
            }
        }
    }
    let mut labels: Vec<(String, Vec<std::result::Result<Vec<f64>, String>>)> = cfg
        .methods
        .iter()
        .zip(per_method)
        .map(|(m, v)| (m.name().to_string(), v))
        .collect();
    if let Some(oracle) = cfg.oracle {
        let v = (0..n_ap)
            .map(|ap| oracle_angles(&sc, ap, oracle.sigma_deg, oracle.reflections, &truths[ap]))
            .collect();
        labels.push((ORACLE.into(), v));
    }

    labels
        .into_iter()
        .map(|(method, per_ap)| {
            let aps: Vec<ApOutcome> = per_ap
                .iter()
                .enumerate()
                .map(|(ap, r)| {
                    let (angles, error) = match r {
                        Ok(a) => (Some(a.clone()), None),
                        Err(e) => (None, Some(e.clone())),
                    };
                    let aoa_error_deg = match (&angles, &truths[ap]) {
                        (Some(a), Ok(t)) => t.direct.and_then(|d| matched_error(a, &t.angles, d)),
                        _ => None,
                    };
                    ApOutcome {
                        ap,
                        angles,
                        aoa_error_deg,
                        error,
                    }
                })
                .collect();
            let angle_sets: Vec<Option<Vec<f64>>> = aps.iter().map(|a| a.angles.clone()).collect();
            let located = fuse_angles(&sc.aps, &angle_sets, &cfg.fusion, grid);
            let (estimate, error_m, tie, failure) = match located {
                Ok(l) => (
                    Some([l.x, l.y]),
                    Some((l.x - sc.tx[0]).hypot(l.y - sc.tx[1])),
                    l.tie,
                    None,
                ),
                Err(e) => (None, None, false, Some(e.to_string())),
            };
            TrialRecord {
                scenario: cfg.name.clone(),
                trial,
                seed: sc.seed,
                method,
                tx: sc.tx,
                estimate,
                error_m,
                tie,
                aps,
                failure,
            }
        })
        .collect()
}

fn truth_of(sc: &Scenario, ap: usize) -> Result<ApTruth> {
    let paths = sc.geometry_to_paths(ap)?;
    Ok(ApTruth {
        angles: paths.iter().map(|p| p.theta).collect(),
        direct: paths.iter().position(|p| p.kind == PathKind::Direct),
    })
}

fn oracle_angles(
    sc: &Scenario,
    ap: usize,
    sigma: f64,
    reflections: bool,
    truth: &Result<ApTruth>,
) -> std::result::Result<Vec<f64>, String> {
    let truth = truth.as_ref().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::from_rng(&mut substream(sc.seed, &[TAG_ORACLE, ap as u64]));
    let noise = Normal::new(0.0, sigma.max(0.0)).map_err(|e| e.to_string())?;
    let angles: Vec<f64> = truth
        .angles
        .iter()
        .enumerate()
        .filter(|(i, _)| reflections || Some(*i) == truth.direct)
        .map(|(_, &a)| a + if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 })
        .filter(|a| a.abs() < FIELD_OF_VIEW_DEG)
        .collect();
    if angles.is_empty() {
        Err("no path inside the field of view".into())
    } else {
        Ok(angles)
    }
}
