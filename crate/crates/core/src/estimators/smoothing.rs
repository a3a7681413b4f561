//! Measurement-matrix constructions over the channel axis of a two-antenna
//! CSI matrix. Indices below are 0-based; `x[k][i]` is antenna `k`,
//! channel `i`.

use nalgebra::DMatrix;

use crate::csi::CsiMatrix;
use crate::{Error, Result, C64};

/// Channel taps per antenna in the joint angle/delay MUSIC matrix.
pub const MUSIC_TAPS: usize = 3;

fn require_pair(csi: &CsiMatrix, min_channels: usize) -> Result<()> {
    if csi.antennas() != 2 {
        return Err(Error::Dimension(format!(
            "estimators need exactly 2 antennas, got {}",
            csi.antennas()
        )));
    }
    if csi.channels() < min_channels {
        return Err(Error::Dimension(format!(
            "need at least {min_channels} channels, got {}",
            csi.channels()
        )));
    }
    Ok(())
}

/// Window length of the conjugate-augmented construction,
/// `floor(2(M+1)/3)`, which is also the number of resolvable paths.
pub fn conjugated_capacity(channels: usize) -> usize {
    2 * (channels + 1) / 3
}

/// Window length of the plain smoothed construction, `ceil((M+1)/2)`.
pub fn conventional_window(channels: usize) -> usize {
    (channels + 2) / 2
}

/// Resolvable paths of the plain smoothed construction.
pub fn conventional_capacity(channels: usize) -> usize {
    let w = conventional_window(channels);
    w.min(channels + 1 - w)
}

/// `2·MUSIC_TAPS x (M - MUSIC_TAPS + 1)` matrix: rows are channel windows
/// shifted by 0, 1, 2 for antenna 0 then antenna 1. For M = 8 this is the
/// 6 x 6 layout with `(0,0) = x[0][0]` and `(5,5) = x[1][7]`.
pub fn music_matrix(csi: &CsiMatrix) -> Result<DMatrix<C64>> {
    require_pair(csi, MUSIC_TAPS + 1)?;
    let x = &csi.values;
    let cols = csi.channels() - MUSIC_TAPS + 1;
    Ok(DMatrix::from_fn(2 * MUSIC_TAPS, cols, |r, c| {
        let (k, shift) = (r / MUSIC_TAPS, r % MUSIC_TAPS);
        x[(k, shift + c)]
    }))
}

/// Hankel windows without conjugates, stacked `[X_0; X_1]`:
/// `X_k[r][c] = x[k][r + c]`, window length `conventional_window(M)`.
pub fn conventional_matrix(csi: &CsiMatrix) -> Result<DMatrix<C64>> {
    require_pair(csi, 3)?;
    let m = csi.channels();
    let w = conventional_window(m);
    let cols = m + 1 - w;
    let x = &csi.values;
    Ok(DMatrix::from_fn(2 * w, cols, |r, c| x[(r / w, r % w + c)]))
}

/// Conjugate-augmented windows stacked `[X_0; X_1]`.
///
/// With window length `L = floor(2(M+1)/3)` and `W = M - L + 1` shifts,
/// row `r` of `X_k` is
/// `x[k][r..r+W]` followed by `conj(x[k'][M-1-r]), conj(x[k'][M-2-r]), ...`
/// (`W` entries) where `k'` is the other antenna. For M = 8 each block is
/// 6 x 6 and the stack is 12 x 6.
pub fn conjugated_matrix(csi: &CsiMatrix) -> Result<DMatrix<C64>> {
    require_pair(csi, 2)?;
    let m = csi.channels();
    let l = conjugated_capacity(m);
    let w = m + 1 - l;
    let x = &csi.values;
    Ok(DMatrix::from_fn(2 * l, 2 * w, |row, c| {
        let (k, r) = (row / l, row % l);
        if c < w {
            x[(k, r + c)]
        } else {
            x[(1 - k, m - 1 - r - (c - w))].conj()
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simenv::{ArrayGeometry, ChannelPlan};

    fn indexed() -> CsiMatrix {
        let values = DMatrix::from_fn(2, 8, |k, i| C64::new(k as f64, i as f64));
        CsiMatrix::new(values, ChannelPlan::default(), ArrayGeometry::default(), true).unwrap()
    }

    #[test]
    fn music_layout() {
        let x = indexed();
        let m = music_matrix(&x).unwrap();
        assert_eq!(m.shape(), (6, 6));
        assert_eq!(m[(0, 0)], x.values[(0, 0)]);
        assert_eq!(m[(5, 5)], x.values[(1, 7)]);
        assert_eq!(m[(1, 0)], x.values[(0, 1)]);
        assert_eq!(m[(3, 2)], x.values[(1, 2)]);
        let zero = CsiMatrix {
            values: DMatrix::zeros(2, 8),
            ..x
        };
        assert!(music_matrix(&zero).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn conjugated_layout_matches_printed_blocks() {
        let x = indexed();
        let z = conjugated_matrix(&x).unwrap();
        assert_eq!(z.shape(), (12, 6));
        let v = |k: usize, i: usize| x.values[(k, i - 1)];
        // First row of X_k: x_{k,1} x_{k,2} x_{k,3} x*_{k+1,8} x*_{k+1,7} x*_{k+1,6}.
        let row0 = [v(0, 1), v(0, 2), v(0, 3), v(1, 8).conj(), v(1, 7).conj(), v(1, 6).conj()];
        // Last row: x_{k,6} x_{k,7} x_{k,8} x*_{k+1,3} x*_{k+1,2} x*_{k+1,1}.
        let row5 = [v(0, 6), v(0, 7), v(0, 8), v(1, 3).conj(), v(1, 2).conj(), v(1, 1).conj()];
        let row6 = [v(1, 1), v(1, 2), v(1, 3), v(0, 8).conj(), v(0, 7).conj(), v(0, 6).conj()];
        for c in 0..6 {
            assert_eq!(z[(0, c)], row0[c]);
            assert_eq!(z[(5, c)], row5[c]);
            assert_eq!(z[(6, c)], row6[c]);
        }
    }

    #[test]
    fn capacities() {
        assert_eq!(conjugated_capacity(8), 6);
        assert_eq!(conventional_window(8), 5);
        assert_eq!(conventional_capacity(8), 4);
        let z = conventional_matrix(&indexed()).unwrap();
        assert_eq!(z.shape(), (10, 4));
        assert_eq!(z[(4, 3)], indexed().values[(0, 7)]);
        assert_eq!(z[(5, 0)], indexed().values[(1, 0)]);
    }

    #[test]
    fn rejects_wrong_array() {
        let values = DMatrix::from_element(3, 8, C64::new(1.0, 0.0));
        let geometry = ArrayGeometry {
            antennas: 3,
            spacing: 0.1,
            ..ArrayGeometry::default()
        };
        let x = CsiMatrix::new(values, ChannelPlan::default(), geometry, true).unwrap();
        assert!(matches!(music_matrix(&x), Err(Error::Dimension(_))));
    }
}
