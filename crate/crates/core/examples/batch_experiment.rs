//! A short batch run on the outdoor preset, summarized per method.

use chirploc::harness::report::{summarize, write_table};
use chirploc::harness::{presets, run_scenario, LogEntry, RunOutput};
use chirploc::Result;

pub fn run_example(trials: usize) -> Result<RunOutput> {
    let mut cfg = presets::outdoor_lawn();
    cfg.trials = trials;
    let out = run_scenario(&cfg)?;
    let entries: Vec<LogEntry> = out.records.iter().cloned().map(LogEntry::Trial).collect();
    write_table(&summarize(&entries), std::io::stdout().lock())?;
    Ok(out)
}

fn main() -> Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    run_example(trials).map(|_| ())
}
