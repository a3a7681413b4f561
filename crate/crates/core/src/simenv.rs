//! Ground-truth scenes: planar geometry, first-order multipath and the
//! per-channel, per-antenna baseband captures an access point would record.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::phy::{ChirpParams, IqCapture};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Half-width of the usable angular domain, degrees.
pub const FIELD_OF_VIEW_DEG: f64 = 85.0;

/// Equally spaced channel plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelPlan {
    /// Center frequency of channel 0, Hz.
    pub fc_base: f64,
    /// Center-to-center channel spacing, Hz.
    pub spacing: f64,
    /// Number of channels.
    pub channels: usize,
    /// Channel bandwidth, Hz.
    pub bw: f64,
}

impl Default for ChannelPlan {
    fn default() -> Self {
        Self {
            fc_base: 915e6,
            spacing: 200e3,
            channels: 8,
            bw: 125e3,
        }
    }
}

impl ChannelPlan {
    pub fn validate(&self) -> Result<()> {
        if self.channels < 2 {
            return Err(Error::Parameter("channel plan needs at least 2 channels".into()));
        }
        if !(self.spacing > 0.0 && self.bw > 0.0 && self.fc_base > self.bw) {
            return Err(Error::Parameter(format!("degenerate channel plan {self:?}")));
        }
        Ok(())
    }

    pub fn center(&self, channel: usize) -> f64 {
        self.fc_base + channel as f64 * self.spacing
    }

    pub fn highest_center(&self) -> f64 {
        self.center(self.channels - 1)
    }

    /// Unused spectrum between adjacent channels; negative when they overlap.
    pub fn guard(&self) -> f64 {
        self.spacing - self.bw
    }

    pub fn is_overlapped(&self) -> bool {
        self.spacing < self.bw
    }

    /// Plan made of every `step`-th channel of `self`, starting at `first`.
    pub fn decimate(&self, first: usize, step: usize) -> Self {
        let channels = (self.channels - first).div_ceil(step);
        Self {
            fc_base: self.center(first),
            spacing: self.spacing * step as f64,
            channels,
            bw: self.bw,
        }
    }
}

/// Two-or-more element uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrayGeometry {
    pub antennas: usize,
    /// Element spacing in meters.
    pub spacing: f64,
    /// Propagation speed in m/s.
    pub c: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self {
            antennas: 2,
            spacing: 0.14,
            c: SPEED_OF_LIGHT,
        }
    }
}

impl ArrayGeometry {
    pub fn validate(&self, plan: &ChannelPlan) -> Result<()> {
        if self.antennas < 2 {
            return Err(Error::Parameter("array needs at least 2 antennas".into()));
        }
        let limit = self.c / (2.0 * plan.highest_center());
        if !(self.spacing > 0.0 && self.spacing < limit) {
            return Err(Error::Parameter(format!(
                "antenna spacing {} m not below half wavelength {limit:.4} m",
                self.spacing
            )));
        }
        Ok(())
    }

    /// Inter-element phase factor for a plane wave from `theta_deg` at
    /// carrier `fc`.
    pub fn antenna_factor(&self, theta_deg: f64, fc: f64) -> C64 {
        C64::from_polar(1.0, self.antenna_phase(theta_deg, fc))
    }

    pub fn antenna_phase(&self, theta_deg: f64, fc: f64) -> f64 {
        -2.0 * PI * self.spacing * theta_deg.to_radians().sin() * fc / self.c
    }

    /// Inverts [`Self::antenna_phase`]. Returns the angle and whether the
    /// arcsine argument had to be clipped to [-1, 1].
    pub fn phase_to_angle(&self, phase: f64, fc: f64) -> (f64, bool) {
        let arg = -phase * self.c / (2.0 * PI * self.spacing * fc);
        let clipped = arg.abs() > 1.0;
        (arg.clamp(-1.0, 1.0).asin().to_degrees(), clipped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    Direct,
    Reflected(usize),
}

/// One propagation path as seen by one AP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub kind: PathKind,
    /// Complex attenuation excluding the carrier propagation phase.
    pub alpha: C64,
    /// Time of flight, seconds.
    pub tau: f64,
    /// Angle of arrival relative to the array normal, degrees.
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApPose {
    pub position: [f64; 2],
    /// Array normal in the world frame, degrees counter-clockwise from +x.
    pub boresight_deg: f64,
}

impl ApPose {
    /// Array-relative angle of the world-frame bearing `bearing_deg`,
    /// wrapped to (-180, 180].
    pub fn relative_angle(&self, bearing_deg: f64) -> f64 {
        wrap_degrees(bearing_deg - self.boresight_deg)
    }

    /// Pose at `position` whose boresight looks at `target`.
    pub fn facing(position: [f64; 2], target: [f64; 2]) -> Self {
        let b = (target[1] - position[1])
            .atan2(target[0] - position[0])
            .to_degrees();
        Self {
            position,
            boresight_deg: b.rem_euclid(360.0),
        }
    }
}

/// Point reflector producing one first-order path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflector {
    pub position: [f64; 2],
    /// Reflection magnitude; the scenario's `reflection_loss` when absent.
    #[serde(default)]
    pub gain: Option<f64>,
    /// Reflection phase in radians; drawn from the scenario seed when absent.
    #[serde(default)]
    pub phase: Option<f64>,
}

impl Reflector {
    pub fn at(x: f64, y: f64) -> Self {
        Self {
            position: [x, y],
            gain: None,
            phase: None,
        }
    }
}

/// Everything needed to regenerate the captures of every AP bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub tx: [f64; 2],
    pub aps: Vec<ApPose>,
    pub reflectors: Vec<Reflector>,
    pub plan: ChannelPlan,
    pub geometry: ArrayGeometry,
    pub chirp: ChirpParams,
    /// Per-sample SNR of each capture; `None` means noise-free.
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// Default reflector magnitude relative to free-space loss.
    pub reflection_loss: f64,
    /// Path gain reference: `|alpha| = reference_gain / distance`.
    pub reference_gain: f64,
    /// Extra magnitude scaling of the direct path (0 blocks it).
    pub direct_gain: f64,
    /// Apply independent per-channel oscillator phase offsets.
    pub offsets: bool,
    /// Zero samples appended after the preamble.
    pub padding_samples: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            tx: [0.0, 10.0],
            aps: vec![ApPose {
                position: [0.0, 0.0],
                boresight_deg: 90.0,
            }],
            reflectors: Vec::new(),
            plan: ChannelPlan::default(),
            geometry: ArrayGeometry::default(),
            chirp: ChirpParams::default(),
            snr_db: None,
            seed: 0,
            reflection_loss: 0.5,
            reference_gain: 1.0,
            direct_gain: 1.0,
            offsets: true,
            padding_samples: 0,
        }
    }
}

// Substream tags.
const TAG_OFFSET: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_REFLECTOR: u64 = 3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for the substream identified by `ids` under `seed`.
pub fn substream(seed: u64, ids: &[u64]) -> ChaCha8Rng {
    let key = ids.iter().fold(splitmix(seed), |acc, &id| splitmix(acc ^ splitmix(id)));
    ChaCha8Rng::seed_from_u64(key)
}

pub fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn bearing_deg(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0]).to_degrees()
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.chirp.validate()?;
        self.plan.validate()?;
        self.geometry.validate(&self.plan)?;
        if (self.chirp.bw - self.plan.bw).abs() > 1e-9 {
            return Err(Error::Parameter(
                "chirp bandwidth differs from channel bandwidth".into(),
            ));
        }
        if self.aps.is_empty() {
            return Err(Error::Parameter("scenario has no APs".into()));
        }
        let finite = |p: [f64; 2]| p.iter().all(|v| v.is_finite());
        if !finite(self.tx)
            || !self.aps.iter().all(|a| finite(a.position) && a.boresight_deg.is_finite())
            || !self.reflectors.iter().all(|r| finite(r.position))
        {
            return Err(Error::Parameter("non-finite position".into()));
        }
        Ok(())
    }

    fn ap(&self, ap_index: usize) -> Result<&ApPose> {
        self.aps
            .get(ap_index)
            .ok_or_else(|| Error::Parameter(format!("no AP with index {ap_index}")))
    }

    fn gain_for(&self, length: f64) -> f64 {
        (self.reference_gain / length).min(1.0)
    }

    /// Reflection phase of reflector `r`, fixed for the whole scenario.
    pub fn reflector_phase(&self, r: usize) -> f64 {
        match self.reflectors[r].phase {
            Some(p) => p,
            None => substream(self.seed, &[TAG_REFLECTOR, r as u64]).random_range(-PI..PI),
        }
    }

    /// Direct path plus one first-order path per reflector, restricted to
    /// the array's field of view.
    pub fn geometry_to_paths(&self, ap_index: usize) -> Result<Vec<Path>> {
        let ap = self.ap(ap_index)?;
        let c = self.geometry.c;
        let direct_len = distance(self.tx, ap.position);
        if direct_len < 1e-9 {
            return Err(Error::DegenerateGeometry(format!(
                "AP {ap_index} is co-located with the transmitter"
            )));
        }
        let mut paths = Vec::with_capacity(1 + self.reflectors.len());
        let theta = ap.relative_angle(bearing_deg(ap.position, self.tx));
        if theta.abs() < FIELD_OF_VIEW_DEG && self.direct_gain > 0.0 {
            paths.push(Path {
                kind: PathKind::Direct,
                alpha: C64::new(self.gain_for(direct_len) * self.direct_gain, 0.0),
                tau: direct_len / c,
                theta,
            });
        }
        for (r, refl) in self.reflectors.iter().enumerate() {
            let leg_in = distance(self.tx, refl.position);
            let leg_out = distance(refl.position, ap.position);
            if leg_in < 1e-9 || leg_out < 1e-9 {
                continue;
            }
            let theta = ap.relative_angle(bearing_deg(ap.position, refl.position));
            if theta.abs() >= FIELD_OF_VIEW_DEG {
                continue;
            }
            let total = leg_in + leg_out;
            let rho = refl.gain.unwrap_or(self.reflection_loss);
            paths.push(Path {
                kind: PathKind::Reflected(r),
                alpha: C64::from_polar(rho * self.gain_for(total), self.reflector_phase(r)),
                tau: total / c,
                theta,
            });
        }
        Ok(paths)
    }

    /// Oscillator phase offsets of every channel at one AP.
    pub fn channel_offsets(&self, ap_index: usize) -> Vec<f64> {
        (0..self.plan.channels)
            .map(|ch| {
                if self.offsets {
                    substream(self.seed, &[TAG_OFFSET, ap_index as u64, ch as u64])
                        .random_range(-PI..PI)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Captures of every channel and antenna at one AP, channel-major.
    pub fn synthesize_captures(&self, ap_index: usize) -> Result<Vec<IqCapture>> {
        let paths = self.geometry_to_paths(ap_index)?;
        self.synthesize_with_paths(ap_index, &paths)
    }

    /// Like [`Self::synthesize_captures`] but with caller-supplied paths.
    pub fn synthesize_with_paths(&self, ap_index: usize, paths: &[Path]) -> Result<Vec<IqCapture>> {
        self.validate()?;
        self.ap(ap_index)?;
        let offsets = self.channel_offsets(ap_index);
        let mut out = Vec::with_capacity(self.plan.channels * self.geometry.antennas);
        for (ch, &psi) in offsets.iter().enumerate() {
            for ant in 0..self.geometry.antennas {
                out.push(self.synthesize_one(ap_index, ch, ant, psi, paths));
            }
        }
        Ok(out)
    }

    fn synthesize_one(&self, ap: usize, ch: usize, ant: usize, psi: f64, paths: &[Path]) -> IqCapture {
        let p = &self.chirp;
        let fc = self.plan.fc_base;
        let fi = self.plan.center(ch);
        let weights: Vec<(C64, f64)> = paths
            .iter()
            .map(|path| {
                let carrier = C64::from_polar(1.0, -2.0 * PI * fi * path.tau);
                let steer = self.geometry.antenna_factor(path.theta, fc).powu(ant as u32);
                (path.alpha * carrier * steer, path.tau)
            })
            .collect();
        let rotation = C64::from_polar(1.0, psi);
        let n_signal = p.preamble_samples();
        let mut samples: Vec<C64> = (0..n_signal)
            .map(|n| {
                let t = n as f64 / p.fs;
                let s: C64 = weights.iter().map(|&(w, tau)| w * p.periodic_sample(t - tau)).sum();
                s * rotation
            })
            .collect();

        if let Some(snr_db) = self.snr_db {
            let power = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n_signal as f64;
            let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
            let mut rng = substream(self.seed, &[TAG_NOISE, ap as u64, ch as u64, ant as u64]);
            for s in samples.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *s += C64::new(re, im) * sigma;
            }
        }
        samples.resize(n_signal + self.padding_samples, C64::new(0.0, 0.0));
        IqCapture {
            channel_index: ch,
            antenna_index: ant,
            samples,
            center_freq: fi,
        }
    }
}
