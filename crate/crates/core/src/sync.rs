//! Interchannel phase synchronization.
//!
//! Every channel is measured by its own packet, so each column of the CSI
//! matrix carries an unknown oscillator phase. Adjacent channels are
//! co-phased pairwise along the plan: directly over their shared band when
//! the channels overlap, otherwise through a virtual bridging channel that
//! spans the guard band. The pairwise offsets are then chained from
//! channel 0 upward.

use serde::{Deserialize, Serialize};

use crate::csi::{CsiMatrix, PhaseCurve, DEFAULT_TRIM_HZ};
use crate::simenv::ChannelPlan;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyncConfig {
    /// Edge trim used for phase curves and the bridge band, Hz.
    pub trim_hz: f64,
    /// Moving-average width applied to curves before offset estimation, Hz.
    pub smoothing_hz: f64,
    /// Minimum usable overlap for a pairwise alignment, Hz.
    pub min_overlap_hz: f64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            trim_hz: DEFAULT_TRIM_HZ,
            smoothing_hz: 1e3,
            min_overlap_hz: 8e3,
        }
    }
}

/// Per-channel phase corrections, defined up to one common constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncSolution {
    /// Radians; `corrections[0] == 0`.
    pub corrections: Vec<f64>,
    /// RMS phase misfit of the pairwise alignments, radians.
    pub residual: f64,
}

/// Argument of the mean of unit phasors.
fn circular_mean<I: IntoIterator<Item = C64>>(phasors: I) -> Option<f64> {
    let mut acc = C64::new(0.0, 0.0);
    let mut n = 0usize;
    for p in phasors {
        let m = p.norm();
        if m > 0.0 {
            acc += p / m;
            n += 1;
        }
    }
    (n > 0 && acc.norm() > 0.0).then(|| acc.arg())
}

fn rms_misfit<I: IntoIterator<Item = C64>>(phasors: I, offset: f64) -> (f64, usize) {
    let rot = C64::from_polar(1.0, -offset);
    phasors.into_iter().fold((0.0, 0), |(s, n), p| {
        let e = (p * rot).arg();
        (s + e * e, n + 1)
    })
}

fn overlap(a: &PhaseCurve, b: &PhaseCurve) -> (f64, f64) {
    (a.lowest().max(b.lowest()), a.highest().min(b.highest()))
}

fn samples_in(curve: &PhaseCurve, lo: f64, hi: f64) -> impl Iterator<Item = (f64, C64)> + '_ {
    curve
        .freqs
        .iter()
        .zip(&curve.values)
        .filter(move |(f, _)| **f >= lo && **f <= hi)
        .map(|(f, v)| (*f, *v))
}

fn overlapped_pairs<'a>(a: &'a PhaseCurve, b: &'a PhaseCurve) -> Result<Vec<C64>> {
    let (lo, hi) = overlap(a, b);
    if hi <= lo {
        return Err(Error::NoOverlap {
            a: a.channel_index,
            b: b.channel_index,
        });
    }
    let pairs: Vec<C64> = samples_in(a, lo, hi)
        .filter_map(|(f, va)| b.interpolate(f).map(|vb| va * vb.conj()))
        .collect();
    if pairs.is_empty() {
        return Err(Error::NoOverlap {
            a: a.channel_index,
            b: b.channel_index,
        });
    }
    Ok(pairs)
}

/// Phase offset that co-phases `b` with `a` over their shared band:
/// `b * e^{j offset}` lines up with `a`.
pub fn offset_overlapped(a: &PhaseCurve, b: &PhaseCurve) -> Result<f64> {
    let pairs = overlapped_pairs(a, b)?;
    circular_mean(pairs).ok_or(Error::NoOverlap {
        a: a.channel_index,
        b: b.channel_index,
    })
}

/// Offset for `next` obtained through a virtual channel centered between
/// `current` and `next`.
///
/// The bridge is a linear phase whose slope is the mean of the two curves'
/// fitted slopes. It is anchored to `current` over their overlap, and the
/// returned offset aligns `next` with the bridge over the other overlap.
pub fn bridge_channels(current: &PhaseCurve, next: &PhaseCurve, plan: &ChannelPlan, cfg: &SyncConfig) -> Result<f64> {
    bridge_with_residual(current, next, plan, cfg).map(|(d, _)| d)
}

fn bridge_with_residual(
    current: &PhaseCurve,
    next: &PhaseCurve,
    plan: &ChannelPlan,
    cfg: &SyncConfig,
) -> Result<(f64, (f64, usize))> {
    let center = 0.5 * (plan.center(current.channel_index) + plan.center(next.channel_index));
    let half = 0.5 * plan.bw - cfg.trim_hz;
    let (bridge_lo, bridge_hi) = (center - half, center + half);

    let ov_current = (bridge_lo.max(current.lowest()), bridge_hi.min(current.highest()));
    let ov_next = (bridge_lo.max(next.lowest()), bridge_hi.min(next.highest()));
    for (lo, hi) in [ov_current, ov_next] {
        if hi - lo < cfg.min_overlap_hz {
            return Err(Error::InsufficientOverlap {
                overlap_hz: (hi - lo).max(0.0),
                min_hz: cfg.min_overlap_hz,
            });
        }
    }

    let (slope_a, _) = current.linear_fit(center);
    let (slope_b, _) = next.linear_fit(center);
    let slope = 0.5 * (slope_a + slope_b);
    let line = |f: f64| slope * (f - center);

    let anchor = circular_mean(
        samples_in(current, ov_current.0, ov_current.1).map(|(f, v)| v * C64::from_polar(1.0, -line(f))),
    )
    .ok_or(Error::InsufficientOverlap {
        overlap_hz: 0.0,
        min_hz: cfg.min_overlap_hz,
    })?;

    let pairs: Vec<C64> = samples_in(next, ov_next.0, ov_next.1)
        .map(|(f, v)| C64::from_polar(1.0, anchor + line(f)) * v.conj())
        .collect();
    let delta = circular_mean(pairs.iter().copied()).ok_or(Error::InsufficientOverlap {
        overlap_hz: 0.0,
        min_hz: cfg.min_overlap_hz,
    })?;
    Ok((delta, rms_misfit(pairs, delta)))
}

fn pair_offset(current: &PhaseCurve, next: &PhaseCurve, plan: &ChannelPlan, cfg: &SyncConfig) -> Result<(f64, (f64, usize))> {
    let (lo, hi) = overlap(current, next);
    if hi - lo >= cfg.min_overlap_hz {
        let pairs = overlapped_pairs(current, next)?;
        let delta = offset_overlapped(current, next)?;
        Ok((delta, rms_misfit(pairs, delta)))
    } else {
        bridge_with_residual(current, next, plan, cfg)
    }
}

/// Chains pairwise offsets over channels `0..M` of `plan`.
///
/// Adjacent curves that share at least `min_overlap_hz` of band are aligned
/// directly; all others go through a bridge.
pub fn synchronize(curves: &[PhaseCurve], plan: &ChannelPlan, cfg: &SyncConfig) -> Result<SyncSolution> {
    if curves.len() != plan.channels {
        return Err(Error::Dimension(format!(
            "{} phase curves for {} channels",
            curves.len(),
            plan.channels
        )));
    }
    for (i, c) in curves.iter().enumerate() {
        if c.channel_index != i || c.is_empty() {
            return Err(Error::Parameter(format!("phase curve {i} missing or out of order")));
        }
    }
    let smoothed: Vec<PhaseCurve> = curves.iter().map(|c| c.smoothed(cfg.smoothing_hz)).collect();

    let mut corrections = vec![0.0; plan.channels];
    let (mut sq, mut count) = (0.0, 0usize);
    for i in 1..plan.channels {
        let (delta, (s, n)) = pair_offset(&smoothed[i - 1], &smoothed[i], plan, cfg).map_err(|e| Error::Sync {
            channel: i,
            source: Box::new(e),
        })?;
        corrections[i] = corrections[i - 1] + delta;
        sq += s;
        count += n;
    }
    Ok(SyncSolution {
        corrections,
        residual: if count > 0 { (sq / count as f64).sqrt() } else { 0.0 },
    })
}

/// Applies `e^{j corrections[i]}` to every antenna of channel `i`.
pub fn apply_sync(csi: &CsiMatrix, sol: &SyncSolution) -> Result<CsiMatrix> {
    if csi.synchronized {
        return Err(Error::Parameter("CSI is already synchronized".into()));
    }
    if sol.corrections.len() != csi.channels() {
        return Err(Error::Dimension(format!(
            "{} corrections for {} channels",
            sol.corrections.len(),
            csi.channels()
        )));
    }
    let mut values = csi.values.clone();
    for (i, &c) in sol.corrections.iter().enumerate() {
        let rot = C64::from_polar(1.0, c);
        values.column_mut(i).iter_mut().for_each(|v| *v *= rot);
    }
    Ok(CsiMatrix {
        values,
        synchronized: true,
        ..csi.clone()
    })
}
