//! Channel state from received preambles by pulse compression against the
//! reference up-chirp.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::phy::{freq_to_time, upchirp, ChirpParams, IqCapture};
use crate::simenv::{ArrayGeometry, ChannelPlan};
use crate::{Error, Result, C64};

/// Edge trim applied to phase curves by default, Hz.
pub const DEFAULT_TRIM_HZ: f64 = 4e3;

/// K antennas by M channels of channel-state values.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiMatrix {
    pub values: DMatrix<C64>,
    pub plan: ChannelPlan,
    pub geometry: ArrayGeometry,
    pub synchronized: bool,
}

impl CsiMatrix {
    pub fn new(values: DMatrix<C64>, plan: ChannelPlan, geometry: ArrayGeometry, synchronized: bool) -> Result<Self> {
        if values.nrows() != geometry.antennas || values.ncols() != plan.channels {
            return Err(Error::Dimension(format!(
                "CSI is {}x{}, plan expects {}x{}",
                values.nrows(),
                values.ncols(),
                geometry.antennas,
                plan.channels
            )));
        }
        Ok(Self {
            values,
            plan,
            geometry,
            synchronized,
        })
    }

    pub fn antennas(&self) -> usize {
        self.values.nrows()
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    /// Same matrix with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            values: self.values.map(|v| v * factor),
            ..self.clone()
        }
    }

    /// Keeps channels `first, first + step, ...`.
    pub fn decimate(&self, first: usize, step: usize) -> Self {
        let plan = self.plan.decimate(first, step);
        let cols: Vec<usize> = (0..plan.channels).map(|i| first + i * step).collect();
        let values = self.values.select_columns(cols.iter());
        Self {
            values,
            plan,
            ..self.clone()
        }
    }
}

/// Channel state sampled continuously across one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub channel_index: usize,
    /// Absolute frequencies, strictly increasing.
    pub freqs: Vec<f64>,
    pub values: Vec<C64>,
}

impl PhaseCurve {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn lowest(&self) -> f64 {
        self.freqs[0]
    }

    pub fn highest(&self) -> f64 {
        self.freqs[self.freqs.len() - 1]
    }

    /// Phase unwrapped along frequency.
    pub fn unwrapped_phase(&self) -> Vec<f64> {
        unwrap(&self.values.iter().map(|v| v.arg()).collect::<Vec<_>>())
    }

    /// Least-squares line through the unwrapped phase, as
    /// `(slope rad/Hz, phase at reference_hz)`.
    pub fn linear_fit(&self, reference_hz: f64) -> (f64, f64) {
        let phase = self.unwrapped_phase();
        let n = phase.len() as f64;
        let xs: Vec<f64> = self.freqs.iter().map(|f| f - reference_hz).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = phase.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&phase).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        (slope, my - slope * mx)
    }

    /// Complex value at `f` by linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, f: f64) -> Option<C64> {
        if self.is_empty() || f < self.lowest() || f > self.highest() {
            return None;
        }
        let idx = self.freqs.partition_point(|&x| x <= f);
        if idx == 0 {
            return Some(self.values[0]);
        }
        if idx >= self.len() {
            return Some(self.values[self.len() - 1]);
        }
        let (f0, f1) = (self.freqs[idx - 1], self.freqs[idx]);
        let w = (f - f0) / (f1 - f0);
        Some(self.values[idx - 1] * (1.0 - w) + self.values[idx] * w)
    }

    /// Moving average of the complex values over `width_hz`.
    pub fn smoothed(&self, width_hz: f64) -> Self {
        if self.len() < 2 || width_hz <= 0.0 {
            return self.clone();
        }
        let step = (self.highest() - self.lowest()) / (self.len() - 1) as f64;
        let half = ((width_hz / step) / 2.0).floor() as usize;
        if half == 0 {
            return self.clone();
        }
        let mut prefix = Vec::with_capacity(self.len() + 1);
        prefix.push(C64::new(0.0, 0.0));
        for v in &self.values {
            let last = *prefix.last().unwrap();
            prefix.push(last + v);
        }
        let values = (0..self.len())
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half + 1).min(self.len());
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            })
            .collect();
        Self {
            values,
            ..self.clone()
        }
    }
}

/// Standard 2π unwrapping; a jump of exactly π keeps the running branch.
pub fn unwrap(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut shift = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phase {
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                shift -= 2.0 * PI * ((d - PI) / (2.0 * PI)).ceil();
            } else if d < -PI {
                shift += 2.0 * PI * ((-d - PI) / (2.0 * PI)).ceil();
            }
        }
        prev = Some(p);
        out.push(p + shift);
    }
    out
}

/// Mean of the preamble's `n_preamble` symbols.
pub fn average_preamble(capture: &IqCapture, params: &ChirpParams) -> Result<Vec<C64>> {
    params.validate()?;
    capture.check_length(params)?;
    let n = params.samples_per_symbol();
    let mut acc = vec![C64::new(0.0, 0.0); n];
    for symbol in capture.samples[..params.preamble_samples()].chunks_exact(n) {
        for (a, s) in acc.iter_mut().zip(symbol) {
            *a += s;
        }
    }
    let scale = 1.0 / params.n_preamble as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    Ok(acc)
}

fn check_symbol(symbol: &[C64], params: &ChirpParams) -> Result<()> {
    if symbol.len() != params.samples_per_symbol() {
        return Err(Error::Framing(format!(
            "symbol has {} samples, expected {}",
            symbol.len(),
            params.samples_per_symbol()
        )));
    }
    Ok(())
}

/// Pulse compression of one averaged symbol: `mean(r[n] * conj(u[n]))`.
pub fn extract_csi(symbol: &[C64], params: &ChirpParams) -> Result<C64> {
    check_symbol(symbol, params)?;
    let reference = upchirp(params)?;
    let sum: C64 = symbol.iter().zip(&reference).map(|(r, u)| r * u.conj()).sum();
    Ok(sum / symbol.len() as f64)
}

/// Per-sample channel state mapped onto absolute frequency, with `trim` Hz
/// discarded at each band edge.
pub fn phase_curve(
    symbol: &[C64],
    params: &ChirpParams,
    channel: usize,
    plan: &ChannelPlan,
    trim: f64,
) -> Result<PhaseCurve> {
    check_symbol(symbol, params)?;
    if !(trim >= 0.0 && 2.0 * trim < params.bw) {
        return Err(Error::Domain(format!(
            "trim {trim} Hz leaves no band out of {} Hz",
            params.bw
        )));
    }
    if channel >= plan.channels {
        return Err(Error::Parameter(format!("channel {channel} not in plan")));
    }
    let reference = upchirp(params)?;
    let fi = plan.center(channel);
    let half = 0.5 * params.bw;
    let t_lo = freq_to_time(-half + trim, params)?;
    let t_hi = freq_to_time(half - trim, params)?;
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for (n, (r, u)) in symbol.iter().zip(&reference).enumerate() {
        let t = n as f64 / params.fs;
        if t < t_lo || t > t_hi {
            continue;
        }
        freqs.push(fi + params.time_to_freq(t));
        values.push(r * u.conj());
    }
    if freqs.len() < 2 {
        return Err(Error::Domain("trimmed phase curve is empty".into()));
    }
    Ok(PhaseCurve {
        channel_index: channel,
        freqs,
        values,
    })
}

/// Averaged symbols for every capture, indexed `[antenna][channel]`.
pub fn averaged_symbols(
    captures: &[IqCapture],
    params: &ChirpParams,
    plan: &ChannelPlan,
    geometry: &ArrayGeometry,
) -> Result<Vec<Vec<Vec<C64>>>> {
    let mut grid: Vec<Vec<Option<Vec<C64>>>> = vec![vec![None; plan.channels]; geometry.antennas];
    for cap in captures {
        if cap.antenna_index >= geometry.antennas || cap.channel_index >= plan.channels {
            return Err(Error::Parameter(format!(
                "capture for channel {} antenna {} outside plan",
                cap.channel_index, cap.antenna_index
            )));
        }
        grid[cap.antenna_index][cap.channel_index] = Some(average_preamble(cap, params)?);
    }
    grid.into_iter()
        .enumerate()
        .map(|(k, row)| {
            row.into_iter()
                .enumerate()
                .map(|(i, s)| {
                    s.ok_or_else(|| Error::Parameter(format!("missing capture for channel {i} antenna {k}")))
                })
                .collect()
        })
        .collect()
}

/// Unsynchronized CSI matrix from a complete set of captures.
pub fn csi_from_symbols(
    symbols: &[Vec<Vec<C64>>],
    params: &ChirpParams,
    plan: &ChannelPlan,
    geometry: &ArrayGeometry,
) -> Result<CsiMatrix> {
    let mut values = DMatrix::zeros(geometry.antennas, plan.channels);
    for (k, row) in symbols.iter().enumerate() {
        for (i, sym) in row.iter().enumerate() {
            values[(k, i)] = extract_csi(sym, params)?;
        }
    }
    CsiMatrix::new(values, *plan, *geometry, false)
}

pub fn csi_from_captures(
    captures: &[IqCapture],
    params: &ChirpParams,
    plan: &ChannelPlan,
    geometry: &ArrayGeometry,
) -> Result<CsiMatrix> {
    let symbols = averaged_symbols(captures, params, plan, geometry)?;
    csi_from_symbols(&symbols, params, plan, geometry)
}

/// Narrowband model `H[k][i] = Σ γ_p Φ_p^k Ω_p^i` with
/// `γ_p = α_p e^{-j2π f_c τ_p}`, `Φ_p` the antenna factor at `f_c` and
/// `Ω_p = e^{-j2π f_δ τ_p}`. Marked synchronized.
pub fn model_csi(paths: &[crate::simenv::Path], plan: &ChannelPlan, geometry: &ArrayGeometry) -> CsiMatrix {
    let fc = plan.fc_base;
    let values = DMatrix::from_fn(geometry.antennas, plan.channels, |k, i| {
        paths
            .iter()
            .map(|p| {
                let gamma = p.alpha * C64::from_polar(1.0, -2.0 * PI * fc * p.tau);
                let phi = geometry.antenna_factor(p.theta, fc);
                let omega = C64::from_polar(1.0, -2.0 * PI * plan.spacing * p.tau);
                gamma * phi.powu(k as u32) * omega.powu(i as u32)
            })
            .sum()
    });
    CsiMatrix {
        values,
        plan: *plan,
        geometry: *geometry,
        synchronized: true,
    }
}
