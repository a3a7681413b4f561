//! Per-AP processing: captures → CSI → synchronization → angle estimates.

use serde::{Deserialize, Serialize};

use crate::csi::{averaged_symbols, csi_from_symbols, phase_curve, CsiMatrix, PhaseCurve};
use crate::estimators::{estimate, AoaEstimate, EstimatorConfig, Method};
use crate::phy::{ChirpParams, IqCapture};
use crate::simenv::{ArrayGeometry, ChannelPlan};
use crate::sync::{apply_sync, synchronize, SyncConfig, SyncSolution};
use crate::{Result, C64};

/// Stage settings shared by the batch runner and the service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineSetup {
    pub chirp: ChirpParams,
    pub plan: ChannelPlan,
    pub geometry: ArrayGeometry,
    pub sync: SyncConfig,
    pub estimator: EstimatorConfig,
}

/// Raw and synchronized CSI of one AP.
#[derive(Debug, Clone)]
pub struct PreparedCsi {
    pub raw: CsiMatrix,
    pub synced: CsiMatrix,
    pub sync: SyncSolution,
}

/// Phase curves of antenna 0, the antenna used for synchronization.
pub fn sync_curves(symbols: &[Vec<Vec<C64>>], setup: &PipelineSetup) -> Result<Vec<PhaseCurve>> {
    symbols[0]
        .iter()
        .enumerate()
        .map(|(ch, sym)| phase_curve(sym, &setup.chirp, ch, &setup.plan, setup.sync.trim_hz))
        .collect()
}

/// Averages the preambles, extracts CSI and removes per-channel offsets.
/// The same correction is applied to every antenna, so inter-antenna phase
/// is untouched.
pub fn prepare_csi(captures: &[IqCapture], setup: &PipelineSetup) -> Result<PreparedCsi> {
    let symbols = averaged_symbols(captures, &setup.chirp, &setup.plan, &setup.geometry)?;
    let raw = csi_from_symbols(&symbols, &setup.chirp, &setup.plan, &setup.geometry)?;
    let curves = sync_curves(&symbols, setup)?;
    let sync = synchronize(&curves, &setup.plan, &setup.sync)?;
    let synced = apply_sync(&raw, &sync)?;
    Ok(PreparedCsi { raw, synced, sync })
}

/// Every requested method on one AP's captures. A synchronization failure
/// fails the subspace methods; the phase-difference baseline does not need
/// synchronized CSI and still runs on the raw matrix.
pub fn estimate_ap(captures: &[IqCapture], setup: &PipelineSetup, methods: &[Method]) -> Vec<(Method, Result<AoaEstimate>)> {
    let symbols = match averaged_symbols(captures, &setup.chirp, &setup.plan, &setup.geometry) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return methods
                .iter()
                .map(|&m| (m, Err(crate::Error::Framing(msg.clone()))))
                .collect();
        }
    };
    let raw = csi_from_symbols(&symbols, &setup.chirp, &setup.plan, &setup.geometry);
    let synced = raw.as_ref().map_err(|e| e.to_string()).and_then(|raw| {
        sync_curves(&symbols, setup)
            .and_then(|curves| synchronize(&curves, &setup.plan, &setup.sync))
            .and_then(|sol| apply_sync(raw, &sol))
            .map_err(|e| e.to_string())
    });
    methods
        .iter()
        .map(|&m| {
            let result = match (m, &raw, &synced) {
                (_, _, Ok(csi)) => estimate(csi, m, &setup.estimator),
                (Method::Baseline, Ok(raw), Err(_)) => estimate(raw, m, &setup.estimator),
                (_, _, Err(msg)) => Err(crate::Error::Numeric(msg.clone())),
            };
            (m, result)
        })
        .collect()
}

/// Rounds every sample to 32-bit floats, the precision of capture files and
/// of the upload protocol.
pub fn quantize(captures: &mut [IqCapture]) {
    for cap in captures {
        for s in &mut cap.samples {
            *s = C64::new(f64::from(s.re as f32), f64::from(s.im as f32));
        }
    }
}
