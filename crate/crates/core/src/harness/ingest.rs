//! Ingestion service: uploaded captures are grouped into per-AP time
//! windows, each complete window runs the CSI → sync → AoA chain, and
//! windows of different APs that fall together are fused into a location.
//!
//! # Protocol
//!
//! Line-delimited JSON over TCP. Each request line is either an upload
//!
//! ```text
//! {"ap":0,"timestamp":12.5,"channel":3,"antenna":1,"payload":"<base64>"}
//! ```
//!
//! where `payload` is the standard base64 encoding of interleaved
//! little-endian `f32` I/Q samples, or a control line `{"command":"flush"}`
//! that closes every open window. Every line gets one response line:
//! `{"status":"ok","emitted":N}` or `{"status":"error","error":"..."}`.
//!
//! # Windows
//!
//! The service clock is the largest timestamp seen. An AP's window opens at
//! its first upload and spans `window_s`; once it holds every channel and
//! antenna it is processed. A window still incomplete when the clock passes
//! its end is logged as dropped. Processed windows whose start times lie
//! within one window length form a fusion group, which is fused as soon as
//! every configured AP has reported, or at its expiry (one more window
//! length) if at least two have.
//!
//! [`Ingestor`] holds the state and does no I/O; [`Service`] adds the lock,
//! the results log and the socket loop. The DSP runs outside the lock.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::capture_file::{decode_samples, encode_samples};
use super::config::ExperimentConfig;
use super::pipeline::{estimate_ap, PipelineSetup};
use super::runner::fuse_angles;
use super::LogEntry;
use crate::estimators::Method;
use crate::fusion::{FusionConfig, GridSpec};
use crate::phy::IqCapture;
use crate::simenv::ApPose;
use crate::{Error, Result};

/// One uploaded capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UploadRecord {
    pub ap: usize,
    /// Seconds on the uploader's clock; non-decreasing per AP.
    pub timestamp: f64,
    pub channel: usize,
    pub antenna: usize,
    pub payload: String,
}

impl UploadRecord {
    pub fn from_capture(ap: usize, timestamp: f64, capture: &IqCapture) -> Self {
        Self {
            ap,
            timestamp,
            channel: capture.channel_index,
            antenna: capture.antenna_index,
            payload: STANDARD.encode(encode_samples(&capture.samples)),
        }
    }

    pub fn samples(&self) -> Result<Vec<crate::C64>> {
        let bytes = STANDARD
            .decode(self.payload.as_bytes())
            .map_err(|e| Error::Record(format!("payload is not base64: {e}")))?;
        decode_samples(&bytes).map_err(|e| Error::Record(e.to_string()))
    }
}

/// Uploads of one burst: every AP sends channel `i` at `t0 + i * hop_s`.
pub fn burst_records(captures: &[Vec<IqCapture>], t0: f64, hop_s: f64) -> Vec<UploadRecord> {
    let mut out = Vec::new();
    let channels = captures
        .iter()
        .flat_map(|c| c.iter().map(|x| x.channel_index + 1))
        .max()
        .unwrap_or(0);
    for ch in 0..channels {
        for (ap, caps) in captures.iter().enumerate() {
            for cap in caps.iter().filter(|c| c.channel_index == ch) {
                out.push(UploadRecord::from_capture(ap, t0 + ch as f64 * hop_s, cap));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApAngles {
    pub ap: usize,
    /// Start of the AP's window.
    pub timestamp: f64,
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub group: u64,
    /// Start of the fusion group.
    pub timestamp: f64,
    pub x: f64,
    pub y: f64,
    pub peak: f64,
    pub tie: bool,
    pub aps: Vec<ApAngles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRecord {
    pub timestamp: f64,
    pub ap: Option<usize>,
    pub reason: String,
}

/// Everything the service needs besides its state.
#[derive(Debug, Clone)]
pub struct ServiceSetup {
    pub pipeline: PipelineSetup,
    pub method: Method,
    pub aps: Vec<ApPose>,
    pub fusion: FusionConfig,
    pub grid: GridSpec,
    pub window_s: f64,
}

impl ServiceSetup {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            pipeline: cfg.pipeline(),
            method: cfg.service.method,
            aps: cfg.scenario.aps.clone(),
            fusion: cfg.fusion,
            grid: cfg.grid()?,
            window_s: cfg.service.window_s,
        })
    }

    fn expected(&self) -> usize {
        self.pipeline.plan.channels * self.pipeline.geometry.antennas
    }
}

/// A complete AP window ready for the DSP chain.
#[derive(Debug, Clone)]
pub struct Work {
    pub ap: usize,
    pub start: f64,
    /// Channel-major, antennas inner.
    pub captures: Vec<IqCapture>,
}

#[derive(Debug, Clone)]
pub struct ApResult {
    pub ap: usize,
    pub start: f64,
    pub angles: std::result::Result<Vec<f64>, String>,
}

/// Runs the configured estimator on one window.
pub fn process(setup: &ServiceSetup, work: Work) -> ApResult {
    let angles = estimate_ap(&work.captures, &setup.pipeline, &[setup.method])
        .pop()
        .map(|(_, r)| r.map(|e| e.angles).map_err(|e| e.to_string()))
        .unwrap_or_else(|| Err("no estimate".into()));
    ApResult {
        ap: work.ap,
        start: work.start,
        angles,
    }
}

#[derive(Debug)]
struct ApWindow {
    start: f64,
    captures: BTreeMap<(usize, usize), IqCapture>,
}

#[derive(Debug)]
struct Group {
    id: u64,
    start: f64,
    pending: Vec<usize>,
    reported: Vec<usize>,
    results: BTreeMap<usize, (f64, Vec<f64>)>,
}

/// Window and fusion-group state; pure bookkeeping, no I/O.
#[derive(Debug)]
pub struct Ingestor {
    setup: Arc<ServiceSetup>,
    clock: f64,
    last_seen: Vec<Option<f64>>,
    windows: Vec<Option<ApWindow>>,
    groups: Vec<Group>,
    next_group: u64,
}

impl Ingestor {
    pub fn new(setup: Arc<ServiceSetup>) -> Self {
        let n = setup.aps.len();
        Self {
            setup,
            clock: f64::NEG_INFINITY,
            last_seen: vec![None; n],
            windows: (0..n).map(|_| None).collect(),
            groups: Vec::new(),
            next_group: 0,
        }
    }

    pub fn setup(&self) -> &Arc<ServiceSetup> {
        &self.setup
    }

    /// Validates and stores one upload. Rejected records leave the state
    /// untouched. Returns the window it completed, if any, and log entries
    /// for whatever expired.
    pub fn accept(&mut self, rec: &UploadRecord) -> Result<(Option<Work>, Vec<LogEntry>)> {
        let s = &self.setup;
        if rec.ap >= s.aps.len() {
            return Err(Error::Record(format!("unknown AP {}", rec.ap)));
        }
        if rec.channel >= s.pipeline.plan.channels {
            return Err(Error::Record(format!("channel {} not in plan", rec.channel)));
        }
        if rec.antenna >= s.pipeline.geometry.antennas {
            return Err(Error::Record(format!("antenna {} not on the array", rec.antenna)));
        }
        if !rec.timestamp.is_finite() {
            return Err(Error::Record("non-finite timestamp".into()));
        }
        if let Some(last) = self.last_seen[rec.ap] {
            if rec.timestamp < last {
                return Err(Error::Record(format!(
                    "timestamp {} precedes {last} from AP {}",
                    rec.timestamp, rec.ap
                )));
            }
        }
        let capture = IqCapture {
            channel_index: rec.channel,
            antenna_index: rec.antenna,
            samples: rec.samples()?,
            center_freq: s.pipeline.plan.center(rec.channel),
        };
        capture
            .check_length(&s.pipeline.chirp)
            .map_err(|e| Error::Record(e.to_string()))?;
        let window_s = s.window_s;
        let duplicate = self.windows[rec.ap].as_ref().is_some_and(|w| {
            rec.timestamp < w.start + window_s && w.captures.contains_key(&(rec.channel, rec.antenna))
        });
        if duplicate {
            return Err(Error::Record(format!(
                "channel {} antenna {} already received in this window",
                rec.channel, rec.antenna
            )));
        }

        self.last_seen[rec.ap] = Some(rec.timestamp);
        self.clock = self.clock.max(rec.timestamp);
        let mut log = self.expire(false);
        let window = self.windows[rec.ap].get_or_insert_with(|| ApWindow {
            start: rec.timestamp,
            captures: BTreeMap::new(),
        });
        window.captures.insert((rec.channel, rec.antenna), capture);
        if window.captures.len() < self.setup.expected() {
            return Ok((None, log));
        }
        let window = self.windows[rec.ap].take().expect("window just filled");
        let start = window.start;
        self.join_group(rec.ap, start);
        log.extend(self.expire(false));
        Ok((
            Some(Work {
                ap: rec.ap,
                start,
                captures: window.captures.into_values().collect(),
            }),
            log,
        ))
    }

    fn join_group(&mut self, ap: usize, start: f64) {
        let w = self.setup.window_s;
        let found = self.groups.iter_mut().find(|g| {
            (start - g.start).abs() < w && !g.pending.contains(&ap) && !g.reported.contains(&ap)
        });
        match found {
            Some(g) => g.pending.push(ap),
            None => {
                self.groups.push(Group {
                    id: self.next_group,
                    start,
                    pending: vec![ap],
                    reported: Vec::new(),
                    results: BTreeMap::new(),
                });
                self.next_group += 1;
            }
        }
    }

    /// Records the outcome of a processed window.
    pub fn complete(&mut self, result: ApResult) -> Vec<LogEntry> {
        let mut log = Vec::new();
        let Some(gi) = self
            .groups
            .iter()
            .position(|g| g.pending.contains(&result.ap) && (g.start - result.start).abs() < self.setup.window_s)
        else {
            return log;
        };
        let g = &mut self.groups[gi];
        g.pending.retain(|&a| a != result.ap);
        g.reported.push(result.ap);
        match result.angles {
            Ok(angles) => {
                g.results.insert(result.ap, (result.start, angles));
            }
            Err(reason) => log.push(LogEntry::Dropped(DroppedRecord {
                timestamp: result.start,
                ap: Some(result.ap),
                reason: format!("processing failed: {reason}"),
            })),
        }
        if g.results.len() == self.setup.aps.len() {
            let g = self.groups.remove(gi);
            log.push(self.emit(g));
        }
        log.extend(self.expire(false));
        log
    }

    /// Closes every window and group regardless of the clock.
    pub fn flush(&mut self) -> Vec<LogEntry> {
        self.expire(true)
    }

    fn expire(&mut self, all: bool) -> Vec<LogEntry> {
        let (w, clock, expected) = (self.setup.window_s, self.clock, self.setup.expected());
        let mut log = Vec::new();
        for (ap, slot) in self.windows.iter_mut().enumerate() {
            if slot.as_ref().is_some_and(|win| all || clock >= win.start + w) {
                let win = slot.take().unwrap();
                log.push(LogEntry::Dropped(DroppedRecord {
                    timestamp: win.start,
                    ap: Some(ap),
                    reason: format!("incomplete window: {} of {expected} captures", win.captures.len()),
                }));
            }
        }
        let mut keep = Vec::new();
        for g in std::mem::take(&mut self.groups) {
            let expired = g.pending.is_empty() && (all || clock >= g.start + 2.0 * w);
            if !expired {
                keep.push(g);
            } else if g.results.len() >= 2 {
                log.push(self.emit(g));
            } else {
                log.push(LogEntry::Dropped(DroppedRecord {
                    timestamp: g.start,
                    ap: None,
                    reason: format!("only {} AP(s) with angles in the fusion window", g.results.len()),
                }));
            }
        }
        self.groups = keep;
        log
    }

    fn emit(&self, g: Group) -> LogEntry {
        let s = &self.setup;
        let angle_sets: Vec<Option<Vec<f64>>> = (0..s.aps.len())
            .map(|ap| g.results.get(&ap).map(|(_, a)| a.clone()))
            .collect();
        match fuse_angles(&s.aps, &angle_sets, &s.fusion, &s.grid) {
            Ok(l) => LogEntry::Location(LocationRecord {
                group: g.id,
                timestamp: g.start,
                x: l.x,
                y: l.y,
                peak: l.peak,
                tie: l.tie,
                aps: g
                    .results
                    .into_iter()
                    .map(|(ap, (timestamp, angles))| ApAngles { ap, timestamp, angles })
                    .collect(),
            }),
            Err(e) => LogEntry::Dropped(DroppedRecord {
                timestamp: g.start,
                ap: None,
                reason: format!("fusion failed: {e}"),
            }),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Request {
    Upload(UploadRecord),
    Command { command: String },
}

#[derive(Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Response {
    Ok { emitted: usize },
    Error { error: String },
}

/// Shared service state: the ingestor under a lock and the results log.
pub struct Service {
    setup: Arc<ServiceSetup>,
    state: Mutex<Ingestor>,
    log: Mutex<Box<dyn Write + Send>>,
}

impl Service {
    pub fn new(setup: ServiceSetup, log: Box<dyn Write + Send>) -> Self {
        let setup = Arc::new(setup);
        Self {
            state: Mutex::new(Ingestor::new(setup.clone())),
            setup,
            log: Mutex::new(log),
        }
    }

    fn append(&self, entries: &[LogEntry]) -> Result<usize> {
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        for e in entries {
            serde_json::to_writer(&mut *log, e)?;
            log.write_all(b"\n")?;
        }
        log.flush()?;
        Ok(entries.iter().filter(|e| matches!(e, LogEntry::Location(_))).count())
    }

    /// Handles one upload; returns the number of locations emitted.
    pub fn submit(&self, rec: &UploadRecord) -> Result<usize> {
        let (work, entries) = self.state.lock().unwrap_or_else(|e| e.into_inner()).accept(rec)?;
        let mut emitted = self.append(&entries)?;
        if let Some(work) = work {
            let result = process(&self.setup, work);
            let entries = self.state.lock().unwrap_or_else(|e| e.into_inner()).complete(result);
            emitted += self.append(&entries)?;
        }
        Ok(emitted)
    }

    pub fn flush(&self) -> Result<usize> {
        let entries = self.state.lock().unwrap_or_else(|e| e.into_inner()).flush();
        self.append(&entries)
    }

    /// Parses and handles one protocol line.
    pub fn handle_line(&self, line: &str) -> Response {
        let outcome = match serde_json::from_str::<Request>(line) {
            Ok(Request::Upload(rec)) => self.submit(&rec),
            Ok(Request::Command { command }) if command == "flush" => self.flush(),
            Ok(Request::Command { command }) => Err(Error::Record(format!("unknown command {command:?}"))),
            Err(e) => Err(Error::Record(e.to_string())),
        };
        match outcome {
            Ok(emitted) => Response::Ok { emitted },
            Err(e) => Response::Error { error: e.to_string() },
        }
    }

    fn connection(&self, stream: TcpStream) -> Result<()> {
        let mut out = stream.try_clone()?;
        for line in BufReader::new(stream).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let resp = self.handle_line(&line);
            serde_json::to_writer(&mut out, &resp)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Accepts connections until the listener fails, one thread each.
    pub fn serve(self: Arc<Self>, listener: TcpListener) -> Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            let me = self.clone();
            std::thread::spawn(move || {
                if let Err(e) = me.connection(stream) {
                    log::warn!("connection closed: {e}");
                }
            });
        }
        Ok(())
    }
}
