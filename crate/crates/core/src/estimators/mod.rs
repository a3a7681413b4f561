//! Angle-of-arrival estimators over a synchronized two-antenna CSI matrix.

mod baseline;
pub mod linalg;
mod music;
mod esprit;
pub mod order;
pub mod smoothing;

use serde::{Deserialize, Serialize};

pub use baseline::baseline_aoa;
pub use esprit::{esprit_conjugated, esprit_conventional};
pub use music::{music_auto, music_joint, music_spectrum, MusicGrid, MusicSpectrum};
pub use order::{select_model_order, OrderRule};
pub use smoothing::{conjugated_matrix, conventional_matrix, music_matrix};

use crate::csi::CsiMatrix;
use crate::simenv::{ArrayGeometry, FIELD_OF_VIEW_DEG};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Phase difference between the two antennas, averaged over channels.
    Baseline,
    /// Joint angle/delay MUSIC over the smoothed channel taps.
    MusicJoint,
    /// ESPRIT over plain Hankel windows of the channel axis.
    EspritConventional,
    /// ESPRIT over windows augmented with the other antenna's conjugates.
    EspritConjugated,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Baseline,
        Method::MusicJoint,
        Method::EspritConventional,
        Method::EspritConjugated,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::MusicJoint => "music_joint",
            Method::EspritConventional => "esprit_conventional",
            Method::EspritConjugated => "esprit_conjugated",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct EstimatorConfig {
    pub order: OrderRule,
    pub music: MusicGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoaEstimate {
    pub method: Method,
    /// Degrees, each inside the field of view.
    pub angles: Vec<f64>,
    /// Seconds, aligned with `angles` (joint MUSIC only).
    pub tofs: Option<Vec<f64>>,
    /// Covariance eigenvalues, descending.
    pub eigen_spectrum: Vec<f64>,
    pub model_order: usize,
    /// Arcsine arguments clipped to [-1, 1].
    pub clipped: usize,
    /// Angles discarded for falling outside the field of view.
    pub dropped: usize,
}

pub fn estimate(csi: &CsiMatrix, method: Method, cfg: &EstimatorConfig) -> Result<AoaEstimate> {
    match method {
        Method::Baseline => baseline_aoa(csi),
        Method::MusicJoint => music_auto(csi, cfg),
        Method::EspritConventional => esprit_conventional(csi, cfg),
        Method::EspritConjugated => esprit_conjugated(csi, cfg),
    }
}

fn require_synchronized(csi: &CsiMatrix) -> Result<()> {
    if csi.synchronized {
        Ok(())
    } else {
        Err(Error::Unsynchronized)
    }
}

/// Converts inter-antenna phases to angles, dropping those outside the
/// field of view. Returns `(angles, kept indices, clipped, dropped)`.
fn phases_to_angles(phases: &[f64], geometry: &ArrayGeometry, fc: f64) -> (Vec<f64>, Vec<usize>, usize, usize) {
    let mut angles = Vec::new();
    let mut kept = Vec::new();
    let (mut clipped, mut dropped) = (0, 0);
    for (i, &ph) in phases.iter().enumerate() {
        let (theta, c) = geometry.phase_to_angle(ph, fc);
        clipped += usize::from(c);
        if theta.abs() < FIELD_OF_VIEW_DEG {
            angles.push(theta);
            kept.push(i);
        } else {
            dropped += 1;
        }
    }
    (angles, kept, clipped, dropped)
}
