//! Command-line front end. The binary only parses arguments and calls
//! [`run`].

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use super::capture_file;
use super::config::ExperimentConfig;
use super::ingest::{Service, ServiceSetup};
use super::pipeline::{estimate_ap, quantize};
use super::report::{read_log, summarize, write_cdf_csv, write_table};
use super::{presets, run_scenario};
use crate::estimators::{AoaEstimate, Method};
use crate::fusion::{angles_heatmap, fuse, locate};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "chirploc", version, about = "Multi-channel LoRa angle-of-arrival localization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// Built-in scene used when no config is given.
    #[arg(long, value_parser = presets::NAMES)]
    pub preset: Option<String>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Restricts the estimators; repeatable.
    #[arg(long = "method", short = 'm')]
    pub methods: Vec<Method>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the captures of one trial into capture files.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Estimate angles from capture files.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Directory of `ap<A>_ch<C>_ant<K>.iq` files.
        #[arg(long)]
        captures: PathBuf,
    },
    /// Fuse per-AP angle sets into a heat map and a location.
    Fuse {
        #[command(flatten)]
        common: Common,
        /// JSON lines with `ap` and `angles` fields, as written by `estimate`.
        #[arg(long)]
        estimates: PathBuf,
        /// Heat-map output; `.bin` selects the binary layout, anything else text.
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Run a batch experiment end to end and write the results log.
    Run {
        #[command(flatten)]
        common: Common,
        /// Overrides the trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Start the ingestion service.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Overrides the listen address.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Summarize a results log.
    Report {
        /// Results log (JSON lines).
        log: PathBuf,
        /// Also write CDF points as CSV.
        #[arg(long)]
        cdf: Option<PathBuf>,
    },
}

impl Common {
    pub fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => presets::by_name(name).ok_or_else(|| Error::Config(format!("unknown preset {name}")))?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.scenario.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if !self.methods.is_empty() {
            cfg.methods = self.methods.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One line of an estimates file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateLine {
    pub ap: usize,
    pub method: String,
    pub angles: Option<Vec<f64>>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<AoaEstimate>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, trial } => simulate(&common.load()?, trial),
        Command::Estimate { common, captures } => estimate(&common.load()?, &captures),
        Command::Fuse {
            common,
            estimates,
            heatmap,
        } => fuse_cmd(&common, &estimates, heatmap.as_deref()),
        Command::Run { common, trials } => {
            let mut cfg = common.load()?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            run_cmd(&cfg)
        }
        Command::Serve { common, listen } => {
            let mut cfg = common.load()?;
            if let Some(l) = listen {
                cfg.service.listen = l;
            }
            serve(&cfg)
        }
        Command::Report { log, cdf } => report(&log, cdf.as_deref()),
    }
}

fn simulate(cfg: &ExperimentConfig, trial: usize) -> Result<()> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let sc = cfg.trial_scenario(trial);
    for ap in 0..sc.aps.len() {
        let mut caps = sc.synthesize_captures(ap)?;
        quantize(&mut caps);
        for cap in &caps {
            capture_file::save(&dir.join(capture_file::capture_file_name(ap, cap)), cap, &sc.chirp)?;
        }
    }
    let truth = serde_json::json!({
        "trial": trial,
        "seed": sc.seed,
        "tx": sc.tx,
        "paths": (0..sc.aps.len())
            .map(|ap| sc.geometry_to_paths(ap).map(|p| p.iter().map(|p| p.theta).collect::<Vec<_>>()).ok())
            .collect::<Vec<_>>(),
    });
    fs::write(dir.join("truth.json"), serde_json::to_string_pretty(&truth)? + "\n")?;
    println!(
        "wrote {} captures for {} AP(s) to {}",
        sc.aps.len() * sc.plan.channels * sc.geometry.antennas,
        sc.aps.len(),
        dir.display()
    );
    Ok(())
}

fn estimate(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let setup = cfg.pipeline();
    let out = std::io::stdout();
    let mut out = out.lock();
    for ap in 0..cfg.scenario.aps.len() {
        let files = capture_file::list_ap_files(dir, ap)?;
        if files.is_empty() {
            continue;
        }
        let mut caps = Vec::with_capacity(files.len());
        for f in &files {
            let (header, cap) = capture_file::load(f)?;
            header.check(&setup.chirp)?;
            caps.push(cap);
        }
        for (m, r) in estimate_ap(&caps, &setup, &cfg.methods) {
            let line = match r {
                Ok(e) => EstimateLine {
                    ap,
                    method: m.name().into(),
                    angles: Some(e.angles.clone()),
                    error: None,
                    detail: Some(e),
                },
                Err(e) => EstimateLine {
                    ap,
                    method: m.name().into(),
                    angles: None,
                    error: Some(e.to_string()),
                    detail: None,
                },
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn fuse_cmd(common: &Common, estimates: &Path, heatmap: Option<&Path>) -> Result<()> {
    let cfg = common.load()?;
    let text = fs::read_to_string(estimates)?;
    let mut lines = Vec::new();
    for l in text.lines().filter(|l| !l.trim().is_empty()) {
        lines.push(serde_json::from_str::<EstimateLine>(l)?);
    }
    let mut methods: Vec<String> = lines.iter().map(|l| l.method.clone()).collect();
    methods.sort();
    methods.dedup();
    let method = match (common.methods.as_slice(), methods.as_slice()) {
        ([m], _) => m.name().to_string(),
        ([], [only]) => only.clone(),
        _ => {
            return Err(Error::Parameter(format!(
                "estimates hold methods {methods:?}; pick one with --method"
            )))
        }
    };
    let grid = cfg.grid()?;
    let mut maps = Vec::new();
    for l in lines.iter().filter(|l| l.method == method) {
        let pose = cfg
            .scenario
            .aps
            .get(l.ap)
            .ok_or_else(|| Error::Parameter(format!("estimate for unknown AP {}", l.ap)))?;
        if let Some(a) = &l.angles {
            maps.push(angles_heatmap(pose, a, cfg.fusion.sigma_deg, &grid)?);
        }
    }
    let fused = fuse(&maps)?;
    let loc = locate(&fused, cfg.fusion.locate)?;
    if let Some(path) = heatmap {
        let w = BufWriter::new(fs::File::create(path)?);
        if path.extension().is_some_and(|e| e == "bin") {
            fused.write_binary(w)?;
        } else {
            fused.write_text(w)?;
        }
    }
    println!("{}", serde_json::to_string(&loc)?);
    Ok(())
}

fn run_cmd(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output.dir)?;
    let out = run_scenario(cfg)?;
    let path = cfg.results_path();
    out.write_log(BufWriter::new(fs::File::create(&path)?))?;
    let entries = read_log(BufReader::new(fs::File::open(&path)?))?;
    write_table(&summarize(&entries), std::io::stdout().lock())?;
    let elapsed = out.results.first().map_or(0.0, |r| r.elapsed_s);
    eprintln!("{} trial(s) in {elapsed:.2} s, log at {}", cfg.trials, path.display());
    Ok(())
}

fn serve(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output.dir)?;
    let log = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(cfg.service_results_path())?;
    let service = Arc::new(Service::new(ServiceSetup::from_config(cfg)?, Box::new(log)));
    let listener = TcpListener::bind(&cfg.service.listen)?;
    eprintln!("listening on {}", listener.local_addr()?);
    service.serve(listener)
}

fn report(log: &Path, cdf: Option<&Path>) -> Result<()> {
    let entries = read_log(BufReader::new(fs::File::open(log)?))?;
    let report = summarize(&entries);
    write_table(&report, std::io::stdout().lock())?;
    if let Some(path) = cdf {
        write_cdf_csv(&report, BufWriter::new(fs::File::create(path)?))?;
    }
    Ok(())
}
