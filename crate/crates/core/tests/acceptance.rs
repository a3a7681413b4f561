//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chirploc::csi::{csi_from_captures, model_csi, CsiMatrix};
use chirploc::estimators::{conjugated_matrix, conventional_matrix, estimate, EstimatorConfig, Method};
use chirploc::harness::assign::assign;
use chirploc::harness::ingest::{burst_records, Service, ServiceSetup};
use chirploc::harness::metrics::median;
use chirploc::harness::pipeline::{prepare_csi, quantize, PipelineSetup};
use chirploc::harness::report::read_log;
use chirploc::harness::{presets, run_scenario, ExperimentConfig, LogEntry};
use chirploc::harness::config::OracleAngles;
use chirploc::phy::{upchirp, ChirpParams};
use chirploc::simenv::{ChannelPlan, Path, PathKind, Scenario};
use chirploc::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

// ---------------------------------------------------------------- 1

fn chirp_algebra() -> Outcome {
    let mut worst_rate = 0.0f64;
    let mut worst_period = 0.0f64;
    let mut worst_rollback = 0.0f64;
    let mut worst_mag = 0.0f64;
    for sf in 7u8..=12 {
        for bw in [125e3, 500e3] {
            let p = ChirpParams::new(sf, bw, 8.0 * bw, 8).expect("valid chirp");
            let chips = f64::from(1u32 << sf);
            let rate = bw * bw / chips;
            let period = chips / bw;
            worst_rate = worst_rate.max(((p.chirp_rate() - rate) / rate).abs());
            worst_period = worst_period.max(((p.symbol_duration() - period) / period).abs());
            worst_rollback = worst_rollback.max(wrap(p.phase(period) - p.phase(0.0)).abs());
            for s in upchirp(&p).expect("chirp") {
                worst_mag = worst_mag.max((s.norm() - 1.0).abs());
            }
        }
    }
    let pass = worst_rate <= 1e-12 && worst_period <= 1e-12 && worst_rollback <= 1e-6 && worst_mag <= 1e-12;
    outcome(
        pass,
        format!(
            "rate rel {worst_rate:.1e}, period rel {worst_period:.1e}, rollback {worst_rollback:.1e} rad, |s|-1 {worst_mag:.1e}"
        ),
    )
}

// ---------------------------------------------------------------- 2

/// Zero-lag correlation of the periodic chirp delayed by `tau` with the
/// reference chirp, as the extractor computes it, in closed form: the
/// unwrapped samples form a geometric series, the few wrapped ones pick up
/// an extra `e^{j2π B (t - τ)}`.
fn dispersion(p: &ChirpParams, tau: f64) -> C64 {
    let n = p.samples_per_symbol();
    let lambda = p.bw * p.bw / f64::from(1u32 << p.sf);
    let z = C64::from_polar(1.0, -2.0 * PI * lambda * tau / p.fs);
    let n0 = ((tau * p.fs).ceil() as usize).min(n);
    let tail = if (z - 1.0).norm() < 1e-15 {
        C64::new((n - n0) as f64, 0.0)
    } else {
        z.powu(n0 as u32) * (C64::new(1.0, 0.0) - z.powu((n - n0) as u32)) / (C64::new(1.0, 0.0) - z)
    };
    let head: C64 = (0..n0)
        .map(|k| {
            let t = k as f64 / p.fs;
            z.powu(k as u32) * C64::from_polar(1.0, 2.0 * PI * p.bw * (t - tau))
        })
        .sum();
    C64::from_polar(1.0, 2.0 * PI * (0.5 * lambda * tau * tau + 0.5 * p.bw * tau)) * (head + tail) / n as f64
}

fn random_paths(rng: &mut ChaCha8Rng, n: usize) -> Vec<Path> {
    (0..n)
        .map(|i| Path {
            kind: if i == 0 { PathKind::Direct } else { PathKind::Reflected(i - 1) },
            alpha: C64::from_polar(rng.random_range(0.2..1.0), rng.random_range(-PI..PI)),
            tau: rng.random_range(20e-9..1.5e-6),
            theta: -70.0 + 140.0 * (i as f64 + rng.random_range(0.1..0.9)) / n as f64,
        })
        .collect()
}

fn rel_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn loop_closure() -> Outcome {
    let sc = Scenario {
        offsets: false,
        snr_db: None,
        ..Scenario::default()
    };
    let (plan, geo, chirp) = (sc.plan, sc.geometry, sc.chirp);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut plain = Vec::new();
    for p in [1usize, 2, 4, 6] {
        for _ in 0..5 {
            let paths = random_paths(&mut rng, p);
            let caps = sc.synthesize_with_paths(0, &paths).expect("synthesis");
            let got = csi_from_captures(&caps, &chirp, &plan, &geo).expect("extraction");
            let want = DMatrix::from_fn(geo.antennas, plan.channels, |k, i| {
                paths
                    .iter()
                    .map(|path| {
                        let f = plan.fc_base + i as f64 * plan.spacing;
                        let gamma_omega = path.alpha * C64::from_polar(1.0, -2.0 * PI * f * path.tau);
                        let phi = C64::from_polar(
                            1.0,
                            -2.0 * PI * geo.spacing * path.theta.to_radians().sin() * plan.fc_base / geo.c,
                        );
                        gamma_omega * phi.powu(k as u32) * dispersion(&chirp, path.tau)
                    })
                    .sum::<C64>()
            });
            worst = worst.max(rel_diff(&got.values, &want));
            plain.push(rel_diff(&got.values, &model_csi(&paths, &plan, &geo).values));
        }
    }
    let plain_max = plain.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst <= 1e-6,
        format!(
            "max rel error {worst:.1e} vs model with chirp dispersion (without it: up to {plain_max:.1e})"
        ),
    )
}

// ---------------------------------------------------------------- 3

fn overlapped_plan() -> ChannelPlan {
    ChannelPlan {
        spacing: 100e3,
        channels: 15,
        ..ChannelPlan::default()
    }
}

fn two_path_scene(trial: u64, base: &Scenario) -> (Scenario, Vec<Path>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003 ^ trial.wrapping_mul(0x9e37_79b9));
    let tau1 = rng.random_range(30e-9..100e-9);
    let theta1: f64 = rng.random_range(-50.0..50.0);
    let sep = rng.random_range(15.0..40.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    let theta2 = (theta1 + sep).clamp(-75.0, 75.0);
    let paths = vec![
        Path {
            kind: PathKind::Direct,
            alpha: C64::new(1.0, 0.0),
            tau: tau1,
            theta: theta1,
        },
        Path {
            kind: PathKind::Reflected(0),
            alpha: C64::from_polar(0.5, rng.random_range(-PI..PI)),
            tau: tau1 + rng.random_range(50e-9..200e-9),
            theta: theta2,
        },
    ];
    let sc = Scenario {
        seed: rng.random(),
        ..base.clone()
    };
    (sc, paths)
}

fn setup_for(plan: ChannelPlan) -> PipelineSetup {
    let cfg = ExperimentConfig::default();
    PipelineSetup {
        plan,
        ..cfg.pipeline()
    }
}

fn direct_error(csi: &CsiMatrix, truth: &[f64]) -> Option<f64> {
    let est = estimate(csi, Method::EspritConjugated, &EstimatorConfig::default()).ok()?;
    chirploc::harness::assign::matched_error(&est.angles, truth, 0)
}

struct SyncTrial {
    phase_errors: Vec<f64>,
    aoa: (Option<f64>, Option<f64>),
}

fn sync_trial(trial: u64) -> Option<SyncTrial> {
    let base = Scenario {
        snr_db: Some(10.0),
        offsets: true,
        ..Scenario::default()
    };
    let (sc, paths) = two_path_scene(trial, &base);
    let truth: Vec<f64> = paths.iter().map(|p| p.theta).collect();

    let setup = setup_for(sc.plan);
    let caps = sc.synthesize_with_paths(0, &paths).ok()?;
    let prepared = prepare_csi(&caps, &setup).ok();
    let clean = Scenario {
        snr_db: None,
        offsets: false,
        ..sc.clone()
    };
    let reference = csi_from_captures(
        &clean.synthesize_with_paths(0, &paths).ok()?,
        &sc.chirp,
        &sc.plan,
        &sc.geometry,
    )
    .ok()?;

    let phase_errors = match &prepared {
        Some(p) => {
            let diffs: Vec<C64> = p
                .synced
                .values
                .iter()
                .zip(reference.values.iter())
                .map(|(a, b)| a * b.conj())
                .collect();
            let common: C64 = diffs.iter().map(|d| d / d.norm()).sum();
            diffs.iter().map(|d| wrap(d.arg() - common.arg()).abs()).collect()
        }
        None => vec![PI; reference.values.len()],
    };

    let non = prepared.as_ref().and_then(|p| direct_error(&p.synced, &truth));
    let ov_sc = Scenario {
        plan: overlapped_plan(),
        ..sc.clone()
    };
    let ov = ov_sc
        .synthesize_with_paths(0, &paths)
        .ok()
        .and_then(|c| prepare_csi(&c, &setup_for(ov_sc.plan)).ok())
        .and_then(|p| direct_error(&p.synced.decimate(0, 2), &truth));
    Some(SyncTrial {
        phase_errors,
        aoa: (ov, non),
    })
}

fn sync_recovery() -> Outcome {
    let trials: Vec<Option<SyncTrial>> = (0..500u64).into_par_iter().map(sync_trial).collect();
    let broken = trials.iter().filter(|t| t.is_none()).count();
    let trials: Vec<SyncTrial> = trials.into_iter().flatten().collect();
    let phase: Vec<f64> = trials.iter().flat_map(|t| t.phase_errors.iter().copied()).collect();
    let phase_median = median(&phase).unwrap_or(f64::INFINITY);

    let pairs: Vec<(f64, f64)> = trials
        .iter()
        .filter_map(|t| match t.aoa {
            (Some(o), Some(n)) => Some((o, n)),
            _ => None,
        })
        .collect();
    let ov_fail = trials.iter().filter(|t| t.aoa.0.is_none()).count();
    let non_fail = trials.iter().filter(|t| t.aoa.1.is_none()).count();
    let paired: Vec<f64> = pairs.iter().map(|(o, n)| n - o).collect();
    let paired_median = median(&paired).unwrap_or(f64::INFINITY);
    let ov_med = median(&pairs.iter().map(|p| p.0).collect::<Vec<_>>()).unwrap_or(f64::NAN);
    let non_med = median(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()).unwrap_or(f64::NAN);
    let pass = broken == 0 && phase_median < 0.1 && paired_median <= 0.3 && non_med - ov_med <= 0.3;
    outcome(
        pass,
        format!(
            "phase error median {phase_median:.4} rad; AoA overlapped {ov_med:.2} deg vs non-overlapped {non_med:.2} deg, \
             paired degradation median {paired_median:.3} deg over {} pairs (failures: overlapped {ov_fail}, non-overlapped {non_fail})",
            pairs.len()
        ),
    )
}

// ---------------------------------------------------------------- 4

fn rank_above(m: &DMatrix<C64>, rel: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(0.0f64, |a, &b| a.max(b * b));
    sv.iter().filter(|&&s| s * s > rel * top).count()
}

fn eigen_ratio(m: &DMatrix<C64>, i: usize) -> f64 {
    let mut ev: Vec<f64> = m.clone().svd(false, false).singular_values.iter().map(|s| s * s).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.get(i).map_or(0.0, |v| v / ev[0])
}

fn conjugate_rank() -> Outcome {
    let plan = ChannelPlan::default();
    let geo = chirploc::simenv::ArrayGeometry::default();
    // Delays spread over the unambiguous range 1/spacing so the channel-axis
    // Vandermonde factor is well conditioned; six delays packed into a
    // fraction of it push the sixth eigenvalue below the threshold on
    // conditioning alone.
    let taus: Vec<f64> = (0..6).map(|p| (p as f64 + 0.1) / (6.0 * plan.spacing)).collect();
    let thetas = [-60.0, -35.0, -10.0, 15.0, 40.0, 65.0];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut conj_ranks = Vec::new();
    let mut conv_ranks = Vec::new();
    let mut sixth = f64::INFINITY;
    for _ in 0..20 {
        let paths: Vec<Path> = taus
            .iter()
            .zip(thetas)
            .enumerate()
            .map(|(i, (&tau, theta))| Path {
                kind: PathKind::Reflected(i),
                alpha: C64::from_polar(rng.random_range(0.3..1.0), rng.random_range(-PI..PI)),
                tau,
                theta,
            })
            .collect();
        let csi = model_csi(&paths, &plan, &geo);
        let conj = conjugated_matrix(&csi).expect("conjugated");
        sixth = sixth.min(eigen_ratio(&conj, 5));
        conj_ranks.push(rank_above(&conj, 1e-6));
        conv_ranks.push(rank_above(&conventional_matrix(&csi).expect("conventional"), 1e-6));
    }
    let pass = conj_ranks.iter().all(|&r| r == 6) && conv_ranks.iter().all(|&r| r <= 4);
    outcome(
        pass,
        format!(
            "conjugated ranks {conj_ranks:?} (smallest lambda6/lambda1 {sixth:.1e}), conventional ranks {conv_ranks:?}"
        ),
    )
}

// ---------------------------------------------------------------- 5

fn accuracy_ordering() -> Outcome {
    let mut cfg = presets::indoor_room();
    cfg.trials = 200;
    cfg.oracle = None;
    cfg.methods = vec![Method::Baseline, Method::MusicJoint, Method::EspritConjugated];
    let out = run_scenario(&cfg).expect("run");
    let med = |m: Method| {
        let r = out.result(m.name()).expect("result");
        (median(&r.aoa_errors).unwrap_or(f64::INFINITY), r.aoa_errors.len())
    };
    let (conj, n_conj) = med(Method::EspritConjugated);
    let (base, n_base) = med(Method::Baseline);
    let (music, n_music) = med(Method::MusicJoint);
    let pass = base >= 1.5 * conj && conj < music;
    outcome(
        pass,
        format!(
            "median AoA error: conjugated ESPRIT {conj:.2} deg (n={n_conj}), baseline {base:.2} deg (n={n_base}), \
             MUSIC {music:.2} deg (n={n_music}); baseline/ESPRIT {:.2}",
            base / conj
        ),
    )
}

// ---------------------------------------------------------------- 6

fn recovers_both(angles: &[f64], truth: &[f64], tol: f64) -> bool {
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| angles.iter().map(|a| (a - t).abs()).collect())
        .collect();
    let a = assign(&cost);
    a.iter()
        .zip(truth)
        .all(|(j, t)| j.is_some_and(|j| (angles[j] - t).abs() <= tol))
}

fn tof_limitation() -> Outcome {
    let trials = 100u64;
    let results: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x7f6 + t);
            let paths = vec![
                Path {
                    kind: PathKind::Direct,
                    alpha: C64::new(1.0, 0.0),
                    tau: 200e-9,
                    theta: -10.0,
                },
                Path {
                    kind: PathKind::Reflected(0),
                    alpha: C64::from_polar(0.5, rng.random_range(-PI..PI)),
                    tau: 300e-9,
                    theta: 25.0,
                },
            ];
            let truth = [-10.0, 25.0];
            let sc = Scenario {
                snr_db: Some(20.0),
                offsets: true,
                seed: rng.random(),
                ..Scenario::default()
            };
            let setup = setup_for(sc.plan);
            let Ok(caps) = sc.synthesize_with_paths(0, &paths) else {
                return (false, false);
            };
            let Ok(p) = prepare_csi(&caps, &setup) else {
                return (false, false);
            };
            let merged = estimate(&p.synced, Method::MusicJoint, &setup.estimator).is_ok_and(|e| e.angles.len() == 1);
            let resolved = estimate(&p.synced, Method::EspritConjugated, &setup.estimator)
                .is_ok_and(|e| recovers_both(&e.angles, &truth, 2.0));
            (merged, resolved)
        })
        .collect();
    let merged = results.iter().filter(|r| r.0).count();
    let resolved = results.iter().filter(|r| r.1).count();
    let plan = ChannelPlan::default();
    let bound = 1.0 / (plan.channels as f64 * plan.spacing);
    let pass = merged * 10 >= 9 * trials as usize && resolved * 10 >= 9 * trials as usize;
    outcome(
        pass,
        format!(
            "MUSIC single merged peak {merged}/{trials}, conjugated ESPRIT both within 2 deg {resolved}/{trials} \
             (delay resolution {:.0} ns vs 100 ns separation)",
            bound * 1e9
        ),
    )
}

// ---------------------------------------------------------------- 7

fn fusion_ablation() -> Outcome {
    let mut cfg = presets::outdoor_lawn();
    cfg.trials = 200;
    cfg.methods.clear();
    cfg.oracle = Some(OracleAngles {
        sigma_deg: 3.0,
        reflections: true,
    });
    // Corners listed as C, D, B, A so every subset is a prefix and keeps the
    // per-AP noise streams.
    let corners = cfg.scenario.aps.clone();
    let all = vec![corners[2], corners[3], corners[1], corners[0]];
    cfg.scenario.aps = all.clone();
    cfg.fusion.grid = Some(cfg.grid().expect("grid"));
    let cell = cfg.fusion.grid.expect("grid").cell;
    let mut medians = Vec::new();
    for n in [2usize, 3, 4] {
        let mut sub = cfg.clone();
        sub.scenario.aps = all[..n].to_vec();
        let out = run_scenario(&sub).expect("run");
        let r = out.result(chirploc::harness::runner::ORACLE).expect("oracle result");
        medians.push((median(&r.localization_errors).unwrap_or(f64::INFINITY), r.failed));
    }
    let pass = medians[2].0 < medians[1].0 && medians[1].0 < medians[0].0 && medians[2].0 < 6.0;
    outcome(
        pass,
        format!(
            "median error 2 APs {:.2} m, 3 APs {:.2} m, 4 APs {:.2} m (failed {}/{}/{}, {cell} m cells)",
            medians[0].0, medians[1].0, medians[2].0, medians[0].1, medians[1].1, medians[2].1
        ),
    )
}

// ---------------------------------------------------------------- 8

#[derive(Clone, Default)]
struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(b);
        Ok(b.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn parity_config() -> ExperimentConfig {
    let mut cfg = presets::indoor_room();
    cfg.trials = 4;
    cfg.oracle = None;
    cfg.methods = vec![cfg.service.method];
    cfg
}

fn cli_run(cfg_path: &std::path::Path, out: &std::path::Path) -> Result<Vec<u8>, String> {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_chirploc"))
        .arg("run")
        .arg("--config")
        .arg(cfg_path)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    std::fs::read(out.join("results.jsonl")).map_err(|e| e.to_string())
}

fn determinism_parity() -> Outcome {
    let cfg = parity_config();

    // Repeated seeded runs, in process and through the CLI.
    let log = |c: &ExperimentConfig| {
        let mut buf = Vec::new();
        run_scenario(c).expect("run").write_log(&mut buf).expect("log");
        buf
    };
    let first = log(&cfg);
    let in_process = first == log(&cfg);
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg_path = dir.path().join("parity.toml");
    std::fs::write(&cfg_path, cfg.to_toml().expect("toml")).expect("write config");
    let a = cli_run(&cfg_path, &dir.path().join("a"));
    let b = cli_run(&cfg_path, &dir.path().join("b"));
    let cli_identical = matches!((&a, &b), (Ok(a), Ok(b)) if a == b && *a == first);

    // Service replay over TCP.
    let batch: Vec<Option<[f64; 2]>> = read_log(BufReader::new(first.as_slice()))
        .expect("log parses")
        .into_iter()
        .filter_map(|e| match e {
            LogEntry::Trial(t) => Some(t.estimate),
            _ => None,
        })
        .collect();
    let sink = SharedBuf::default();
    let service = Arc::new(Service::new(
        ServiceSetup::from_config(&cfg).expect("setup"),
        Box::new(sink.clone()),
    ));
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().expect("addr");
    std::thread::spawn({
        let s = service.clone();
        move || s.serve(listener)
    });
    let stream = TcpStream::connect(addr).expect("connect");
    stream.set_read_timeout(Some(Duration::from_secs(30))).ok();
    let mut writer = stream.try_clone().expect("clone");
    let mut reader = BufReader::new(stream);
    let mut send = |line: String| -> serde_json::Value {
        writer.write_all(line.as_bytes()).and_then(|_| writer.write_all(b"\n")).expect("send");
        let mut resp = String::new();
        reader.read_line(&mut resp).expect("response");
        serde_json::from_str(&resp).expect("json response")
    };
    let mut rejected = 0;
    for trial in 0..cfg.trials {
        let sc = cfg.trial_scenario(trial);
        let caps: Vec<_> = (0..sc.aps.len())
            .map(|ap| {
                let mut c = sc.synthesize_captures(ap).expect("captures");
                quantize(&mut c);
                c
            })
            .collect();
        for rec in burst_records(&caps, 10.0 * trial as f64, 0.03) {
            let r = send(serde_json::to_string(&rec).expect("record"));
            rejected += usize::from(r["status"] != "ok");
        }
    }
    send(r#"{"command":"flush"}"#.into());
    let text = String::from_utf8(sink.0.lock().unwrap().clone()).expect("utf8");
    let mut service_locs = vec![None; cfg.trials];
    for e in read_log(BufReader::new(text.as_bytes())).expect("service log") {
        if let LogEntry::Location(l) = e {
            let trial = (l.timestamp / 10.0).round() as usize;
            if trial < service_locs.len() {
                service_locs[trial] = Some([l.x, l.y]);
            }
        }
    }
    let parity = rejected == 0 && service_locs == batch;
    let pass = in_process && cli_identical && parity;
    outcome(
        pass,
        format!(
            "in-process rerun identical: {in_process}, CLI reruns identical: {cli_identical}, \
             service matches batch on {}/{} trials ({rejected} uploads rejected)",
            service_locs.iter().zip(&batch).filter(|(a, b)| a == b).count(),
            batch.len()
        ),
    )
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("chirp algebra", Duration::from_secs(1), chirp_algebra),
        ("CSI loop closure", Duration::from_secs(10), loop_closure),
        ("synchronization recovery", Duration::from_secs(120), sync_recovery),
        ("conjugate rank", Duration::from_secs(5), conjugate_rank),
        ("AoA accuracy ordering", Duration::from_secs(300), accuracy_ordering),
        ("ToF limitation", Duration::from_secs(120), tof_limitation),
        ("fusion ablation", Duration::from_secs(180), fusion_ablation),
        ("determinism and service parity", Duration::from_secs(60), determinism_parity),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} criterion {} ({name}): {} [{:.2} s of {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time limit" }
        );
        let _ = std::io::stdout().flush();
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
