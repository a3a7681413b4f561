use nalgebra::DMatrix;

use super::linalg::{covariance, eigenvalues, hermitian_eigen, tls_rotation};
use super::smoothing::{conjugated_capacity, conjugated_matrix, conventional_capacity, conventional_matrix};
use super::{phases_to_angles, require_synchronized, select_model_order, AoaEstimate, EstimatorConfig, Method};
use crate::csi::CsiMatrix;
use crate::{Error, Result, C64};

/// ESPRIT over plain Hankel windows of each antenna's channel axis.
/// Resolves at most four paths with eight channels.
pub fn esprit_conventional(csi: &CsiMatrix, cfg: &EstimatorConfig) -> Result<AoaEstimate> {
    require_synchronized(csi)?;
    let z = conventional_matrix(csi)?;
    rotational_invariance(csi, &z, conventional_capacity(csi.channels()), Method::EspritConventional, cfg)
}

/// ESPRIT over windows augmented with the conjugated, reversed channel
/// axis of the other antenna. Resolves up to `floor(2(M+1)/3)` paths.
pub fn esprit_conjugated(csi: &CsiMatrix, cfg: &EstimatorConfig) -> Result<AoaEstimate> {
    require_synchronized(csi)?;
    let z = conjugated_matrix(csi)?;
    rotational_invariance(csi, &z, conjugated_capacity(csi.channels()), Method::EspritConjugated, cfg)
}

/// Shared TLS-ESPRIT over a stacked `[X_0; X_1]` measurement matrix whose
/// two halves differ by the per-path antenna rotation.
fn rotational_invariance(
    csi: &CsiMatrix,
    z: &DMatrix<C64>,
    capacity: usize,
    method: Method,
    cfg: &EstimatorConfig,
) -> Result<AoaEstimate> {
    let block = z.nrows() / 2;
    let r = covariance(z);
    let (eigs, vecs) = hermitian_eigen(&r);
    let order = select_model_order(&eigs, capacity.min(block), cfg.order, z.ncols())?;
    if order == 0 {
        return Err(Error::NoSignal);
    }
    let signal = vecs.columns(0, order);
    let e1 = signal.rows(0, block).into_owned();
    let e2 = signal.rows(block, block).into_owned();
    let rotation = tls_rotation(&e1, &e2)?;
    let phases: Vec<f64> = eigenvalues(&rotation)?.iter().map(|z| z.arg()).collect();
    let (mut angles, _, clipped, dropped) = phases_to_angles(&phases, &csi.geometry, csi.plan.fc_base);
    if angles.is_empty() {
        return Err(Error::Domain("every estimated angle lies outside the field of view".into()));
    }
    angles.sort_by(f64::total_cmp);
    Ok(AoaEstimate {
        method,
        angles,
        tofs: None,
        eigen_spectrum: eigs,
        model_order: order,
        clipped,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::model_csi;
    use crate::simenv::{ArrayGeometry, ChannelPlan, Path, PathKind};

    fn paths(spec: &[(f64, f64, f64)]) -> Vec<Path> {
        spec.iter()
            .enumerate()
            .map(|(i, &(theta, tau, phase))| Path {
                kind: PathKind::Reflected(i),
                alpha: C64::from_polar(1.0 - 0.15 * i as f64, phase),
                tau,
                theta,
            })
            .collect()
    }

    fn csi(spec: &[(f64, f64, f64)]) -> CsiMatrix {
        model_csi(&paths(spec), &ChannelPlan::default(), &ArrayGeometry::default())
    }

    fn assert_angles(got: &[f64], want: &[f64], tol: f64) {
        let mut want = want.to_vec();
        want.sort_by(f64::total_cmp);
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn noise_free_paths_are_exact() {
        let spec = [(-40.0, 0.2e-6, 0.3), (10.0, 1.9e-6, -2.0), (55.0, 3.4e-6, 1.1)];
        let cfg = EstimatorConfig::default();
        let want: Vec<f64> = spec.iter().map(|s| s.0).collect();
        assert_angles(&esprit_conjugated(&csi(&spec), &cfg).unwrap().angles, &want, 1e-6);
        assert_angles(&esprit_conventional(&csi(&spec), &cfg).unwrap().angles, &want, 1e-6);
    }

    #[test]
    fn conjugated_resolves_six_paths() {
        let spec: Vec<(f64, f64, f64)> = (0..6)
            .map(|p| (-62.0 + 25.0 * p as f64, (p as f64 + 0.2) * 0.83e-6, 0.7 * p as f64))
            .collect();
        let cfg = EstimatorConfig {
            order: super::super::OrderRule::Threshold { eta: 1e-9 },
            ..Default::default()
        };
        let est = esprit_conjugated(&csi(&spec), &cfg).unwrap();
        assert_eq!(est.model_order, 6);
        assert_angles(&est.angles, &spec.iter().map(|s| s.0).collect::<Vec<_>>(), 1e-5);
        assert!(esprit_conventional(&csi(&spec), &cfg).unwrap().angles.len() <= 4);
    }

    #[test]
    fn needs_synchronized_csi() {
        let mut c = csi(&[(0.0, 1e-7, 0.0)]);
        c.synchronized = false;
        assert!(matches!(
            esprit_conjugated(&c, &EstimatorConfig::default()),
            Err(Error::Unsynchronized)
        ));
    }

    #[test]
    fn silence_has_no_order() {
        let mut c = csi(&[(0.0, 1e-7, 0.0)]);
        c.values.fill(C64::new(0.0, 0.0));
        assert!(matches!(
            esprit_conjugated(&c, &EstimatorConfig::default()),
            Err(Error::NoSignal)
        ));
    }
}
