use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::{covariance, hermitian_eigen};
use super::smoothing::{music_matrix, MUSIC_TAPS};
use super::{require_synchronized, select_model_order, AoaEstimate, EstimatorConfig, Method};
use crate::csi::CsiMatrix;
use crate::simenv::FIELD_OF_VIEW_DEG;
use crate::{Error, Result, C64};

/// Search grid of the joint angle/delay pseudo-spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MusicGrid {
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub theta_step_deg: f64,
    pub tau_max: f64,
    pub tau_step: f64,
    /// Upper bound on paths when the order is selected automatically.
    pub max_paths: usize,
}

impl Default for MusicGrid {
    fn default() -> Self {
        Self {
            theta_min_deg: -85.0,
            theta_max_deg: 85.0,
            theta_step_deg: 0.5,
            tau_max: 2e-6,
            tau_step: 10e-9,
            max_paths: 2 * MUSIC_TAPS - 1,
        }
    }
}

impl MusicGrid {
    pub fn thetas(&self) -> Vec<f64> {
        grid(self.theta_min_deg, self.theta_max_deg, self.theta_step_deg)
    }

    pub fn taus(&self) -> Vec<f64> {
        grid(0.0, self.tau_max, self.tau_step)
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || hi < lo {
        return Vec::new();
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// Pseudo-spectrum over `thetas x taus`, row-major by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicSpectrum {
    pub thetas: Vec<f64>,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

impl MusicSpectrum {
    pub fn at(&self, ti: usize, ui: usize) -> f64 {
        self.values[ti * self.taus.len() + ui]
    }

    /// Local maxima that dominate their 3x3 neighborhood, strongest first.
    /// Among equal neighbors the lower grid index wins.
    pub fn peaks(&self) -> Vec<(usize, usize)> {
        let (nt, nu) = (self.thetas.len(), self.taus.len());
        let mut out = Vec::new();
        for ti in 0..nt {
            for ui in 0..nu {
                let v = self.at(ti, ui);
                let idx = ti * nu + ui;
                let mut is_peak = true;
                'scan: for dt in -1i64..=1 {
                    for du in -1i64..=1 {
                        if dt == 0 && du == 0 {
                            continue;
                        }
                        let (t2, u2) = (ti as i64 + dt, ui as i64 + du);
                        if t2 < 0 || u2 < 0 || t2 >= nt as i64 || u2 >= nu as i64 {
                            continue;
                        }
                        let w = self.at(t2 as usize, u2 as usize);
                        let other = t2 as usize * nu + u2 as usize;
                        if w > v || (w == v && other < idx) {
                            is_peak = false;
                            break 'scan;
                        }
                    }
                }
                if is_peak {
                    out.push((ti, ui));
                }
            }
        }
        out.sort_by(|a, b| self.at(b.0, b.1).total_cmp(&self.at(a.0, a.1)));
        out
    }
}

fn check_psd(eigs: &[f64]) -> Result<()> {
    let top = eigs.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    match eigs.last() {
        Some(&low) if low < -1e-9 * top => Err(Error::Numeric(format!(
            "covariance has negative eigenvalue {low:e}"
        ))),
        _ => Ok(()),
    }
}

/// Classical MUSIC pseudo-spectrum with a noise subspace of dimension
/// `2·MUSIC_TAPS - n_paths`.
pub fn music_spectrum(csi: &CsiMatrix, grid: &MusicGrid, n_paths: usize) -> Result<MusicSpectrum> {
    require_synchronized(csi)?;
    let x = music_matrix(csi)?;
    let dim = x.nrows();
    if n_paths >= dim {
        return Err(Error::Parameter(format!("n_paths {n_paths} must be below {dim}")));
    }
    let thetas = grid.thetas();
    let taus = grid.taus();
    if thetas.is_empty() || taus.is_empty() {
        return Err(Error::Parameter("empty MUSIC search grid".into()));
    }
    let (eigs, vecs) = hermitian_eigen(&covariance(&x));
    check_psd(&eigs)?;
    let noise = vecs.columns(n_paths, dim - n_paths);
    let projector: DMatrix<C64> = &noise * noise.adjoint();

    let fc = csi.plan.fc_base;
    let spacing = csi.plan.spacing;
    let omegas: Vec<C64> = taus.iter().map(|t| C64::from_polar(1.0, -2.0 * PI * spacing * t)).collect();
    let mut values = Vec::with_capacity(thetas.len() * taus.len());
    let mut a = DVector::<C64>::zeros(dim);
    for &theta in &thetas {
        let phi = csi.geometry.antenna_factor(theta, fc);
        for &omega in &omegas {
            let mut tap = C64::new(1.0, 0.0);
            for j in 0..MUSIC_TAPS {
                a[j] = tap;
                a[MUSIC_TAPS + j] = phi * tap;
                tap *= omega;
            }
            let denom = a.dotc(&(&projector * &a)).re;
            values.push(if denom > 1e-300 { 1.0 / denom } else { 1e300 });
        }
    }
    Ok(MusicSpectrum {
        thetas,
        taus,
        values,
        eigenvalues: eigs,
    })
}

/// The `n_paths` strongest distinct peaks of the joint pseudo-spectrum,
/// minus any on the edge of the field of view.
pub fn music_joint(csi: &CsiMatrix, grid: &MusicGrid, n_paths: usize) -> Result<AoaEstimate> {
    let spectrum = music_spectrum(csi, grid, n_paths)?;
    let candidates: Vec<(usize, usize)> = spectrum.peaks().into_iter().take(n_paths.max(1)).collect();
    let peaks: Vec<(usize, usize)> = candidates
        .iter()
        .copied()
        .filter(|&(t, _)| spectrum.thetas[t].abs() < FIELD_OF_VIEW_DEG)
        .collect();
    if peaks.is_empty() {
        return Err(Error::Domain("every MUSIC peak lies on the field-of-view edge".into()));
    }
    let dropped = candidates.len() - peaks.len();
    Ok(AoaEstimate {
        method: Method::MusicJoint,
        angles: peaks.iter().map(|&(t, _)| spectrum.thetas[t]).collect(),
        tofs: Some(peaks.iter().map(|&(_, u)| spectrum.taus[u]).collect()),
        eigen_spectrum: spectrum.eigenvalues,
        model_order: n_paths,
        clipped: 0,
        dropped,
    })
}

/// Joint MUSIC with the path count taken from the covariance eigenvalues.
pub fn music_auto(csi: &CsiMatrix, cfg: &EstimatorConfig) -> Result<AoaEstimate> {
    require_synchronized(csi)?;
    let x = music_matrix(csi)?;
    let (eigs, _) = hermitian_eigen(&covariance(&x));
    let max = cfg.music.max_paths.min(x.nrows() - 1);
    let order = select_model_order(&eigs, max, cfg.order, x.ncols())?;
    if order == 0 {
        return Err(Error::NoSignal);
    }
    music_joint(csi, &cfg.music, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::model_csi;
    use crate::simenv::{ArrayGeometry, ChannelPlan, Path, PathKind};

    fn single(theta: f64, tau: f64) -> CsiMatrix {
        let p = Path {
            kind: PathKind::Direct,
            alpha: C64::from_polar(0.8, 0.4),
            tau,
            theta,
        };
        model_csi(&[p], &ChannelPlan::default(), &ArrayGeometry::default())
    }

    #[test]
    fn grid_sizes() {
        let g = MusicGrid::default();
        assert_eq!(g.thetas().len(), 341);
        assert_eq!(g.taus().len(), 201);
        assert_eq!(*g.thetas().last().unwrap(), 85.0);
    }

    #[test]
    fn single_path_peaks_on_its_cell() {
        let est = music_joint(&single(20.0, 0.5e-6), &MusicGrid::default(), 1).unwrap();
        assert_eq!(est.angles, vec![20.0]);
        let tof = est.tofs.unwrap()[0];
        assert!((tof - 0.5e-6).abs() < 1e-12, "{tof}");
    }

    #[test]
    fn auto_order_on_one_path() {
        let est = music_auto(&single(-35.0, 1.2e-6), &EstimatorConfig::default()).unwrap();
        assert_eq!(est.model_order, 1);
        assert_eq!(est.angles, vec![-35.0]);
    }

    #[test]
    fn order_must_leave_a_noise_subspace() {
        assert!(music_spectrum(&single(0.0, 0.0), &MusicGrid::default(), 6).is_err());
    }
}
