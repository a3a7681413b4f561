use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("framing error: {0}")]
    Framing(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("phase curves of channels {a} and {b} do not overlap")]
    NoOverlap { a: usize, b: usize },

    #[error("bridge overlap of {overlap_hz:.0} Hz is below the {min_hz:.0} Hz minimum")]
    InsufficientOverlap { overlap_hz: f64, min_hz: f64 },

    #[error("synchronizing channel {channel}: {source}")]
    Sync {
        channel: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("CSI is not synchronized")]
    Unsynchronized,

    #[error("no signal subspace found")]
    NoSignal,

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("heat map grids differ")]
    GridMismatch,

    #[error("heat map carries no information above the floor")]
    NoEstimate,

    #[error("malformed record: {0}")]
    Record(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
