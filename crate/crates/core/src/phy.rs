//! Reference up-chirps, preambles and the chirp time/frequency map.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Chirp spread spectrum parameters of one LoRa channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpParams {
    /// Spreading factor, 7..=12.
    pub sf: u8,
    /// Channel bandwidth in Hz.
    pub bw: f64,
    /// Complex baseband sample rate in Hz.
    pub fs: f64,
    /// Number of up-chirps in the preamble.
    pub n_preamble: usize,
}

impl Default for ChirpParams {
    fn default() -> Self {
        Self {
            sf: 7,
            bw: 125e3,
            fs: 1e6,
            n_preamble: 8,
        }
    }
}

impl ChirpParams {
    pub fn new(sf: u8, bw: f64, fs: f64, n_preamble: usize) -> Result<Self> {
        let params = Self {
            sf,
            bw,
            fs,
            n_preamble,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(7..=12).contains(&self.sf) {
            return Err(Error::Parameter(format!(
                "spreading factor {} outside 7..=12",
                self.sf
            )));
        }
        if !(self.bw.is_finite() && self.bw > 0.0) {
            return Err(Error::Parameter(format!("bandwidth {} must be > 0", self.bw)));
        }
        if !(self.fs.is_finite() && self.fs >= self.bw) {
            return Err(Error::Parameter(format!(
                "sample rate {} below bandwidth {}",
                self.fs, self.bw
            )));
        }
        if self.n_preamble == 0 {
            return Err(Error::Parameter("preamble needs at least one chirp".into()));
        }
        if self.samples_per_symbol() < 2 {
            return Err(Error::Parameter("fewer than two samples per symbol".into()));
        }
        Ok(())
    }

    /// Chips per symbol, `2^sf`.
    pub fn chips(&self) -> f64 {
        f64::from(1u32 << self.sf)
    }

    /// Chirp rate in Hz/s, `bw^2 / 2^sf`.
    pub fn chirp_rate(&self) -> f64 {
        self.bw * self.bw / self.chips()
    }

    /// Symbol duration in seconds, `2^sf / bw`.
    pub fn symbol_duration(&self) -> f64 {
        self.chips() / self.bw
    }

    pub fn samples_per_symbol(&self) -> usize {
        (self.fs * self.symbol_duration()).round() as usize
    }

    pub fn preamble_samples(&self) -> usize {
        self.n_preamble * self.samples_per_symbol()
    }

    /// Instantaneous phase of the up-chirp at `t` seconds into the symbol.
    pub fn phase(&self, t: f64) -> f64 {
        2.0 * PI * (0.5 * self.chirp_rate() * t * t - 0.5 * self.bw * t)
    }

    /// Instantaneous frequency offset from the channel center at `t`.
    pub fn time_to_freq(&self, t: f64) -> f64 {
        self.chirp_rate() * t - 0.5 * self.bw
    }

    /// Up-chirp value at `t`, treating the preamble as a periodic train of
    /// identical symbols so that any real `t` is valid.
    pub fn periodic_sample(&self, t: f64) -> C64 {
        let local = t.rem_euclid(self.symbol_duration());
        C64::from_polar(1.0, self.phase(local))
    }
}

/// One received capture: a single channel seen by a single antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct IqCapture {
    pub channel_index: usize,
    pub antenna_index: usize,
    pub samples: Vec<C64>,
    pub center_freq: f64,
}

impl IqCapture {
    /// Checks the capture is long enough to hold the whole preamble.
    pub fn check_length(&self, params: &ChirpParams) -> Result<()> {
        let need = params.preamble_samples();
        if self.samples.len() < need {
            return Err(Error::Framing(format!(
                "capture holds {} samples, preamble needs {need}",
                self.samples.len()
            )));
        }
        Ok(())
    }
}

/// One zero-phase up-chirp sampled at `params.fs`.
pub fn upchirp(params: &ChirpParams) -> Result<Vec<C64>> {
    params.validate()?;
    let n = params.samples_per_symbol();
    Ok((0..n)
        .map(|i| C64::from_polar(1.0, params.phase(i as f64 / params.fs)))
        .collect())
}

/// `n_preamble` identical up-chirps back to back.
pub fn preamble(params: &ChirpParams) -> Result<Vec<C64>> {
    let symbol = upchirp(params)?;
    let mut out = Vec::with_capacity(symbol.len() * params.n_preamble);
    for _ in 0..params.n_preamble {
        out.extend_from_slice(&symbol);
    }
    Ok(out)
}

/// Time within the symbol at which the chirp sweeps through frequency
/// offset `f` (Hz relative to the channel center).
pub fn freq_to_time(f: f64, params: &ChirpParams) -> Result<f64> {
    let half = 0.5 * params.bw;
    if !(f.is_finite() && (-half..=half).contains(&f)) {
        return Err(Error::Domain(format!(
            "frequency offset {f} Hz outside +/-{half} Hz"
        )));
    }
    Ok((f + half) / params.chirp_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sf7() -> ChirpParams {
        ChirpParams::new(7, 125e3, 1e6, 8).unwrap()
    }

    #[test]
    fn first_sample_is_one() {
        let u = upchirp(&sf7()).unwrap();
        assert_eq!(u[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn closed_form_rate_and_duration() {
        let p = sf7();
        assert!((p.symbol_duration() - 1.024e-3).abs() < 1e-15);
        assert!((p.chirp_rate() - 1.220703125e8).abs() < 1e-4);
        assert_eq!(p.samples_per_symbol(), 1024);
    }

    #[test]
    fn phase_rolls_back_after_one_symbol() {
        let p = sf7();
        let end = p.phase(p.symbol_duration());
        assert!(end.abs() < 1e-9, "phase at T = {end}");
    }

    #[test]
    fn preamble_layout() {
        let p = sf7();
        let pre = preamble(&p).unwrap();
        assert_eq!(pre.len(), 8192);
        let n = p.samples_per_symbol();
        for l in 0..7 {
            assert_eq!(pre[l * n..(l + 1) * n], pre[(l + 1) * n..(l + 2) * n]);
        }
        let one = ChirpParams { n_preamble: 1, ..p };
        assert_eq!(preamble(&one).unwrap(), upchirp(&one).unwrap());
    }

    #[test]
    fn freq_to_time_endpoints() {
        let p = sf7();
        assert_eq!(freq_to_time(-62.5e3, &p).unwrap(), 0.0);
        assert!((freq_to_time(62.5e3, &p).unwrap() - p.symbol_duration()).abs() < 1e-15);
        assert!((freq_to_time(0.0, &p).unwrap() - 0.512e-3).abs() < 1e-15);
        assert!(matches!(freq_to_time(70e3, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ChirpParams::new(6, 125e3, 1e6, 8).is_err());
        assert!(ChirpParams::new(13, 125e3, 1e6, 8).is_err());
        assert!(ChirpParams::new(7, 0.0, 1e6, 8).is_err());
        assert!(ChirpParams::new(7, 125e3, 100e3, 8).is_err());
        assert!(ChirpParams::new(7, 125e3, 1e6, 0).is_err());
    }

    #[test]
    fn short_capture_is_a_framing_error() {
        let cap = IqCapture {
            channel_index: 0,
            antenna_index: 0,
            samples: vec![C64::new(0.0, 0.0); 100],
            center_freq: 915e6,
        };
        assert!(matches!(cap.check_length(&sf7()), Err(Error::Framing(_))));
    }

    proptest! {
        #[test]
        fn unit_magnitude_and_rollback(sf in 7u8..=12, wide in any::<bool>()) {
            let bw = if wide { 500e3 } else { 125e3 };
            let p = ChirpParams::new(sf, bw, 2.0 * bw, 1).unwrap();
            for s in upchirp(&p).unwrap() {
                prop_assert!((s.norm() - 1.0).abs() < 1e-12);
            }
            let wrapped = (p.phase(p.symbol_duration()) - p.phase(0.0)).rem_euclid(2.0 * PI);
            prop_assert!(wrapped.min(2.0 * PI - wrapped) < 1e-6);
        }

        #[test]
        fn frequency_map_inverts(frac in 0.0f64..1.0) {
            let p = sf7();
            let t = frac * p.symbol_duration();
            let back = freq_to_time(p.time_to_freq(t), &p).unwrap();
            prop_assert!((back - t).abs() < 1.0 / p.fs);
        }
    }
}
