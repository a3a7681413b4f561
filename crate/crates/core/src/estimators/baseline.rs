use super::{AoaEstimate, Method};
use crate::csi::CsiMatrix;
use crate::simenv::FIELD_OF_VIEW_DEG;
use crate::{Error, Result, C64};

/// Phase-difference angle of arrival: the circular mean over channels of
/// `arg(x[1][i] conj(x[0][i]))`, inverted through the array factor.
///
/// Per-channel oscillator offsets cancel in the antenna difference, so the
/// input need not be synchronized.
pub fn baseline_aoa(csi: &CsiMatrix) -> Result<AoaEstimate> {
    if csi.antennas() != 2 {
        return Err(Error::Dimension(format!("baseline needs 2 antennas, got {}", csi.antennas())));
    }
    let acc: C64 = (0..csi.channels())
        .map(|i| {
            let d = csi.values[(1, i)] * csi.values[(0, i)].conj();
            let m = d.norm();
            if m > 0.0 {
                d / m
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .sum();
    if acc.norm() == 0.0 {
        return Err(Error::NoSignal);
    }
    let (mut theta, clipped) = csi.geometry.phase_to_angle(acc.arg(), csi.plan.fc_base);
    let limit = FIELD_OF_VIEW_DEG - 1e-6;
    let outside = theta.abs() > limit;
    theta = theta.clamp(-limit, limit);
    Ok(AoaEstimate {
        method: Method::Baseline,
        angles: vec![theta],
        tofs: None,
        eigen_spectrum: Vec::new(),
        model_order: 1,
        clipped: usize::from(clipped || outside),
        dropped: 0,
    })
}
