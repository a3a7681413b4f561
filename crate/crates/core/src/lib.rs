//! Narrowband multi-channel localization for LoRa transmitters.
//!
//! The pipeline mirrors what a gateway-side cloud service does with the
//! preambles it overhears on every channel of a frequency-hopping plan:
//!
//! 1. [`phy`] synthesizes the reference up-chirp and maps instantaneous
//!    frequency to time inside a symbol.
//! 2. [`simenv`] turns a planar scene (transmitter, access points, point
//!    reflectors) into per-channel, per-antenna baseband captures that carry
//!    independent oscillator phase offsets.
//! 3. [`csi`] pulse-compresses the averaged preamble into one complex channel
//!    state per channel and antenna, plus a continuous phase-versus-frequency
//!    curve across the channel.
//! 4. [`sync`] removes the per-channel phase offsets by chaining pairwise
//!    alignments, synthesizing a virtual bridging channel across guard bands.
//! 5. [`estimators`] resolve multipath angles of arrival (phase difference,
//!    joint angle/delay MUSIC, spatially smoothed ESPRIT and its conjugate
//!    augmented variant).
//! 6. [`fusion`] turns each AP's angle set into a likelihood heat map and
//!    multiplies the maps to locate the transmitter.
//!
//! [`harness`] wires the stages into batch experiments, file formats and an
//! ingestion service.

pub mod csi;
pub mod error;
pub mod estimators;
pub mod fusion;
pub mod harness;
pub mod phy;
pub mod simenv;
pub mod sync;

pub use error::{Error, Result};

/// Complex sample type used throughout the crate.
pub type C64 = nalgebra::Complex<f64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
