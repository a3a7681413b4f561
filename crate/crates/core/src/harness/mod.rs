//! Experiments, file formats and the ingestion service.
//!
//! Batch runs and the service append to the same kind of results log: one
//! JSON object per line, discriminated by its `kind` field (`trial`,
//! `location` or `dropped`). Logs carry no wall-clock data, so identical
//! inputs give byte-identical logs.

pub mod assign;
pub mod capture_file;
pub mod cli;
pub mod config;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod presets;
pub mod report;
pub mod runner;

use serde::{Deserialize, Serialize};

pub use config::ExperimentConfig;
pub use runner::{run_scenario, ExperimentResult, RunOutput, TrialRecord};

/// One line of a results log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEntry {
    Trial(TrialRecord),
    Location(ingest::LocationRecord),
    Dropped(ingest::DroppedRecord),
}
